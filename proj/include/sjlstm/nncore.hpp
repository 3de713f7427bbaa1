#pragma once

// Fixed-topology numerical kernel: dense layers, LSTM cell, softmax,
// dropout, global-norm clipping and RMSprop. Every layer has a hand-written
// backward pass; there is no general autodiff.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "sjlstm/rng.hpp"
#include "sjlstm/tensor.hpp"

namespace sjlstm {

enum class Activation : std::uint8_t { Linear, ReLU };

template <class T>
struct Dense {
    Matrix<T> weight;  // out x in
    std::vector<T> bias;
    Activation activation{Activation::Linear};

    Dense() = default;
    Dense(std::size_t in, std::size_t out, Activation act) : weight(out, in), bias(out, T{0}), activation(act) {}

    std::size_t in() const { return weight.cols; }
    std::size_t out() const { return weight.rows; }

    bool operator==(const Dense&) const = default;
};

/// Glorot-uniform weights, zero bias.
template <class T>
void glorot_init(Matrix<T>& w, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    for (auto& v : w.data) {
        v = static_cast<T>(rng.uniform(-bound, bound));
    }
}

template <class T>
void glorot_init(Dense<T>& layer, Rng& rng) {
    glorot_init(layer.weight, rng);
    std::fill(layer.bias.begin(), layer.bias.end(), T{0});
}

template <class T>
struct DenseCache {
    std::vector<T> input;
    std::vector<T> output;
};

template <class T>
std::vector<T> dense_forward(const Dense<T>& layer, std::span<const T> x, DenseCache<T>* cache = nullptr) {
    require_size(x.size(), layer.in(), "dense input");
    std::vector<T> y(layer.out());
    affine<T>(layer.weight, layer.bias, x, y);
    if (layer.activation == Activation::ReLU) {
        for (auto& v : y) {
            v = v > T{0} ? v : T{0};
        }
    }
    if (cache != nullptr) {
        cache->input.assign(x.begin(), x.end());
        cache->output = y;
    }
    return y;
}

/// Accumulates parameter gradients into `grad` and input gradients into `dx`
/// (pass an empty span to drop them).
template <class T>
void dense_backward(const Dense<T>& layer, const DenseCache<T>& cache, std::span<const T> dy, Dense<T>& grad,
                    std::span<T> dx) {
    require_size(dy.size(), layer.out(), "dense upstream gradient");
    std::vector<T> dpre(dy.begin(), dy.end());
    if (layer.activation == Activation::ReLU) {
        for (std::size_t i = 0; i < dpre.size(); ++i) {
            if (!(cache.output[i] > T{0})) {
                dpre[i] = T{0};
            }
        }
    }
    accumulate_outer<T>(dpre, cache.input, grad.weight);
    add_into<T>(dpre, grad.bias);
    if (!dx.empty()) {
        accumulate_transposed<T>(layer.weight, dpre, dx);
    }
}

// ---------------------------------------------------------------------------
// LSTM

template <class T>
inline T sigmoid(T x) {
    return T{1} / (T{1} + std::exp(-x));
}

/// The four gates (input, forget, output, candidate) are stacked row-wise in a
/// single (4m x (d+m)) matrix acting on concat(x, h_prev).
template <class T>
struct LstmCell {
    Matrix<T> weight;
    std::vector<T> bias;
    std::size_t input_dim{0};
    std::size_t cell_dim{0};

    LstmCell() = default;
    LstmCell(std::size_t d, std::size_t m)
        : weight(4 * m, d + m), bias(4 * m, T{0}), input_dim(d), cell_dim(m) {}

    bool operator==(const LstmCell&) const = default;
};

template <class T>
void glorot_init(LstmCell<T>& cell, Rng& rng) {
    // Bounds per gate block, i.e. fan (d+m) -> m.
    const std::size_t m = cell.cell_dim;
    const double bound = std::sqrt(6.0 / static_cast<double>(cell.input_dim + 2 * m));
    for (auto& v : cell.weight.data) {
        v = static_cast<T>(rng.uniform(-bound, bound));
    }
    std::fill(cell.bias.begin(), cell.bias.end(), T{0});
}

template <class T>
struct LstmState {
    std::vector<T> h;
    std::vector<T> c;

    static LstmState zeros(std::size_t m) { return {std::vector<T>(m, T{0}), std::vector<T>(m, T{0})}; }
};

template <class T>
struct LstmCache {
    std::vector<T> z;       // concat(x, h_prev)
    std::vector<T> c_prev;
    std::vector<T> gates;   // i, f, o, g after their nonlinearities
    std::vector<T> tanh_c;
};

template <class T>
LstmState<T> lstm_step(const LstmCell<T>& cell, std::span<const T> x, std::span<const T> h_prev,
                       std::span<const T> c_prev, LstmCache<T>* cache = nullptr) {
    const std::size_t d = cell.input_dim;
    const std::size_t m = cell.cell_dim;
    require_size(x.size(), d, "lstm input");
    require_size(h_prev.size(), m, "lstm h_prev");
    require_size(c_prev.size(), m, "lstm c_prev");

    std::vector<T> z(d + m);
    std::copy(x.begin(), x.end(), z.begin());
    std::copy(h_prev.begin(), h_prev.end(), z.begin() + static_cast<std::ptrdiff_t>(d));

    std::vector<T> gates(4 * m);
    affine<T>(cell.weight, cell.bias, z, gates);
    for (std::size_t k = 0; k < 3 * m; ++k) {
        gates[k] = sigmoid(gates[k]);
    }
    for (std::size_t k = 3 * m; k < 4 * m; ++k) {
        gates[k] = std::tanh(gates[k]);
    }

    LstmState<T> next{std::vector<T>(m), std::vector<T>(m)};
    std::vector<T> tanh_c(m);
    for (std::size_t k = 0; k < m; ++k) {
        const T i = gates[k];
        const T f = gates[m + k];
        const T o = gates[2 * m + k];
        const T g = gates[3 * m + k];
        next.c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = std::tanh(next.c[k]);
        next.h[k] = o * tanh_c[k];
    }
    if (cache != nullptr) {
        cache->z = std::move(z);
        cache->c_prev.assign(c_prev.begin(), c_prev.end());
        cache->gates = std::move(gates);
        cache->tanh_c = std::move(tanh_c);
    }
    return next;
}

/// Given dL/dh_t and dL/dc_t, accumulates parameter gradients and writes
/// dL/dx, dL/dh_prev, dL/dc_prev (overwritten, not accumulated).
template <class T>
void lstm_backward(const LstmCell<T>& cell, const LstmCache<T>& cache, std::span<const T> dh, std::span<const T> dc,
                   LstmCell<T>& grad, std::span<T> dx, std::span<T> dh_prev, std::span<T> dc_prev) {
    const std::size_t d = cell.input_dim;
    const std::size_t m = cell.cell_dim;
    std::vector<T> dpre(4 * m);
    for (std::size_t k = 0; k < m; ++k) {
        const T i = cache.gates[k];
        const T f = cache.gates[m + k];
        const T o = cache.gates[2 * m + k];
        const T g = cache.gates[3 * m + k];
        const T tc = cache.tanh_c[k];
        const T dct = dc[k] + dh[k] * o * (T{1} - tc * tc);
        dpre[k] = dct * g * i * (T{1} - i);
        dpre[m + k] = dct * cache.c_prev[k] * f * (T{1} - f);
        dpre[2 * m + k] = dh[k] * tc * o * (T{1} - o);
        dpre[3 * m + k] = dct * i * (T{1} - g * g);
        dc_prev[k] = dct * f;
    }
    accumulate_outer<T>(dpre, cache.z, grad.weight);
    add_into<T>(dpre, grad.bias);
    std::vector<T> dz(d + m, T{0});
    accumulate_transposed<T>(cell.weight, dpre, dz);
    std::copy(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(d), dx.begin());
    std::copy(dz.begin() + static_cast<std::ptrdiff_t>(d), dz.end(), dh_prev.begin());
}

// ---------------------------------------------------------------------------
// Softmax family

template <class T>
std::vector<T> softmax(std::span<const T> logits) {
    std::vector<T> p(logits.size());
    if (logits.empty()) {
        return p;
    }
    T mx = logits[0];
    for (T v : logits) {
        mx = v > mx ? v : mx;
    }
    T sum{0};
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p) {
        v /= sum;
    }
    return p;
}

template <class T>
std::vector<T> log_softmax(std::span<const T> logits) {
    std::vector<T> out(logits.size());
    if (logits.empty()) {
        return out;
    }
    T mx = logits[0];
    for (T v : logits) {
        mx = v > mx ? v : mx;
    }
    T sum{0};
    for (T v : logits) {
        sum += std::exp(v - mx);
    }
    const T lse = mx + std::log(sum);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = logits[i] - lse;
    }
    return out;
}

/// Index of the largest entry, lowest index on ties.
template <class T>
std::size_t argmax(std::span<const T> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Dropout

/// Inverted dropout. An empty `scale` means identity.
template <class T>
struct DropoutMask {
    std::vector<T> scale;
};

template <class T>
std::vector<T> dropout(std::span<const T> x, double rate, bool training, Rng& rng, DropoutMask<T>* mask = nullptr) {
    std::vector<T> y(x.begin(), x.end());
    if (mask != nullptr) {
        mask->scale.clear();
    }
    if (!training || rate <= 0.0) {
        return y;
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    std::vector<T> scale(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        scale[i] = rng.uniform() < rate ? T{0} : keep_scale;
        y[i] *= scale[i];
    }
    if (mask != nullptr) {
        mask->scale = std::move(scale);
    }
    return y;
}

template <class T>
void dropout_backward(const DropoutMask<T>& mask, std::span<T> dy) {
    if (mask.scale.empty()) {
        return;
    }
    for (std::size_t i = 0; i < dy.size(); ++i) {
        dy[i] *= mask.scale[i];
    }
}

// ---------------------------------------------------------------------------
// Optimization

template <class T>
double global_norm(std::span<const std::span<T>> tensors) {
    double sq = 0.0;
    for (const auto& t : tensors) {
        for (T v : t) {
            sq += static_cast<double>(v) * static_cast<double>(v);
        }
    }
    return std::sqrt(sq);
}

/// Global-norm clipping. Returns the norm before clipping.
template <class T>
double clip_gradients(std::span<const std::span<T>> tensors, double threshold) {
    const double norm = global_norm(tensors);
    if (norm > threshold) {
        const T scale = static_cast<T>(threshold / norm);
        for (const auto& t : tensors) {
            for (auto& v : t) {
                v *= scale;
            }
        }
    }
    return norm;
}

/// RMSprop: v <- decay*v + (1-decay)*g^2; theta <- theta - lr*g/(sqrt(v)+eps).
/// Moving averages are created lazily, one per tensor slot.
template <class T>
class RmsProp {
public:
    explicit RmsProp(double learning_rate, double decay = 0.9, double epsilon = 1e-8)
        : lr_(learning_rate), decay_(decay), eps_(epsilon) {}

    void step(std::span<const std::span<T>> params, std::span<const std::span<T>> grads) {
        require_size(grads.size(), params.size(), "rmsprop tensor count");
        if (avg_.empty()) {
            for (const auto& p : params) {
                avg_.emplace_back(p.size(), T{0});
            }
        }
        require_size(params.size(), avg_.size(), "rmsprop state");
        const T decay = static_cast<T>(decay_);
        const T one_minus = static_cast<T>(1.0 - decay_);
        const T lr = static_cast<T>(lr_);
        const T eps = static_cast<T>(eps_);
        for (std::size_t t = 0; t < params.size(); ++t) {
            auto p = params[t];
            auto g = grads[t];
            auto& v = avg_[t];
            require_size(g.size(), p.size(), "rmsprop gradient");
            for (std::size_t i = 0; i < p.size(); ++i) {
                v[i] = decay * v[i] + one_minus * g[i] * g[i];
                p[i] -= lr * g[i] / (std::sqrt(v[i]) + eps);
            }
        }
    }

    std::span<const std::vector<T>> averages() const { return avg_; }
    double learning_rate() const { return lr_; }

private:
    double lr_;
    double decay_;
    double eps_;
    std::vector<std::vector<T>> avg_;
};

}  // namespace sjlstm
