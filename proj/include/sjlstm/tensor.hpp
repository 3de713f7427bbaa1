#pragma once

// Dense row-major matrix and the handful of BLAS-2 kernels the model needs.

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sjlstm {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

template <class T>
struct Matrix {
    std::size_t rows{0};
    std::size_t cols{0};
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, T fill = T{0}) : rows(r), cols(c), data(r * c, fill) {}

    T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }
    bool operator==(const Matrix&) const = default;
};

inline void require_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw ShapeError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                         std::to_string(got));
    }
}

// y = W x + b
template <class T>
void affine(const Matrix<T>& w, std::span<const T> b, std::span<const T> x, std::span<T> y) {
    assert(x.size() == w.cols && y.size() == w.rows && b.size() == w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const T* wr = w.data.data() + r * w.cols;
        T acc{0};
        for (std::size_t c = 0; c < w.cols; ++c) {
            acc += wr[c] * x[c];
        }
        y[r] = acc + b[r];
    }
}

// dx += W^T dy
template <class T>
void accumulate_transposed(const Matrix<T>& w, std::span<const T> dy, std::span<T> dx) {
    assert(dy.size() == w.rows && dx.size() == w.cols);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const T g = dy[r];
        if (g == T{0}) {
            continue;
        }
        const T* wr = w.data.data() + r * w.cols;
        for (std::size_t c = 0; c < w.cols; ++c) {
            dx[c] += wr[c] * g;
        }
    }
}

// dW += dy x^T
template <class T>
void accumulate_outer(std::span<const T> dy, std::span<const T> x, Matrix<T>& dw) {
    assert(dy.size() == dw.rows && x.size() == dw.cols);
    for (std::size_t r = 0; r < dw.rows; ++r) {
        const T g = dy[r];
        if (g == T{0}) {
            continue;
        }
        T* dr = dw.data.data() + r * dw.cols;
        for (std::size_t c = 0; c < dw.cols; ++c) {
            dr[c] += g * x[c];
        }
    }
}

template <class T>
void add_into(std::span<const T> src, std::span<T> dst) {
    assert(src.size() == dst.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] += src[i];
    }
}

}  // namespace sjlstm
