#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sjlstm/actions.hpp"
#include "sjlstm/agents.hpp"
#include "sjlstm/corpus.hpp"
#include "sjlstm/nncore.hpp"

namespace sjlstm {

/// Dense(m -> m, ReLU) followed by Dense(m -> C, Linear) on the final LSTM output.
template <class T>
struct ClassifierHead {
    Dense<T> hidden;
    Dense<T> out;

    ClassifierHead() = default;
    ClassifierHead(std::size_t m, std::size_t classes)
        : hidden(m, m, Activation::ReLU), out(m, classes, Activation::Linear) {}

    bool operator==(const ClassifierHead&) const = default;
};

struct ModelDims {
    std::size_t vocab_size{0};
    std::size_t embed_dim{0};
    std::size_t cell_dim{128};
    std::size_t classes{2};
    std::size_t trunk_width{kAgentTrunkWidth};
};

template <class T>
struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    std::span<T> values;
};

template <class T>
struct ModelParams {
    EmbeddingTable<T> embedding;
    LstmCell<T> lstm;
    AgentNet<T> skip_agent;
    AgentNet<T> jump_agent;
    ClassifierHead<T> classifier;

    ModelParams() = default;
    explicit ModelParams(const ModelDims& dims)
        : embedding{Matrix<T>(dims.vocab_size, dims.embed_dim), true},
          lstm(dims.embed_dim, dims.cell_dim),
          skip_agent(skip_agent_input_dim(dims.embed_dim, dims.cell_dim), kSkipActions, dims.trunk_width),
          jump_agent(dims.cell_dim, kJumpActions, dims.trunk_width),
          classifier(dims.cell_dim, dims.classes) {}

    ModelDims dims() const {
        return {embedding.rows(), embedding.dim(), lstm.cell_dim, classifier.out.out(), skip_agent.trunk.out()};
    }
    std::size_t embed_dim() const { return embedding.dim(); }
    std::size_t cell_dim() const { return lstm.cell_dim; }
    std::size_t classes() const { return classifier.out.out(); }

    /// Visits every tensor in a fixed order: (name, shape, values).
    template <class F>
    void for_each_tensor(F&& f) {
        visit_impl(*this, f);
    }
    template <class F>
    void for_each_tensor(F&& f) const {
        visit_impl(*this, f);
    }

    std::vector<TensorRef<T>> tensors() {
        std::vector<TensorRef<T>> out;
        for_each_tensor([&](std::string_view name, std::vector<std::size_t> shape, std::span<T> v) {
            out.push_back({std::string(name), std::move(shape), v});
        });
        return out;
    }

    /// Same shapes, all zeros. Used as the gradient accumulator.
    ModelParams zeros_like() const {
        ModelParams z = *this;
        z.for_each_tensor([](std::string_view, const std::vector<std::size_t>&, std::span<T> v) {
            std::fill(v.begin(), v.end(), T{0});
        });
        return z;
    }

    bool operator==(const ModelParams& o) const {
        return embedding.table == o.embedding.table && lstm == o.lstm && skip_agent == o.skip_agent &&
               jump_agent == o.jump_agent && classifier == o.classifier;
    }

private:
    template <class Self, class F>
    static void visit_impl(Self& self, F& f) {
        using V = std::conditional_t<std::is_const_v<Self>, const T, T>;
        auto mat = [&](std::string_view name, auto& m) {
            f(name, std::vector<std::size_t>{m.rows, m.cols}, std::span<V>(m.data));
        };
        auto vec = [&](std::string_view name, auto& v) { f(name, std::vector<std::size_t>{v.size()}, std::span<V>(v)); };
        auto dense = [&](const std::string& prefix, auto& layer) {
            mat(prefix + ".weight", layer.weight);
            vec(prefix + ".bias", layer.bias);
        };
        auto agent = [&](const std::string& prefix, auto& a) {
            dense(prefix + ".trunk", a.trunk);
            dense(prefix + ".policy", a.policy);
            dense(prefix + ".value", a.value);
        };
        mat("embedding", self.embedding.table);
        mat("lstm.weight", self.lstm.weight);
        vec("lstm.bias", self.lstm.bias);
        agent("skip_agent", self.skip_agent);
        agent("jump_agent", self.jump_agent);
        dense("classifier.hidden", self.classifier.hidden);
        dense("classifier.out", self.classifier.out);
    }
};

/// Fresh model: random embeddings (unless supplied), Glorot elsewhere.
template <class T>
ModelParams<T> init_model(const ModelDims& dims, Rng& rng) {
    ModelParams<T> p(dims);
    p.embedding = random_embeddings<T>(dims.vocab_size, dims.embed_dim, rng);
    glorot_init(p.lstm, rng);
    glorot_init(p.skip_agent, rng);
    glorot_init(p.jump_agent, rng);
    glorot_init(p.classifier.hidden, rng);
    glorot_init(p.classifier.out, rng);
    return p;
}

template <class To, class From>
ModelParams<To> convert_params(const ModelParams<From>& src) {
    ModelParams<To> dst(src.dims());
    dst.embedding.trainable = src.embedding.trainable;
    std::vector<std::span<const From>> from;
    src.for_each_tensor([&](std::string_view, const std::vector<std::size_t>&, std::span<const From> v) {
        from.push_back(v);
    });
    std::size_t k = 0;
    dst.for_each_tensor([&](std::string_view, const std::vector<std::size_t>&, std::span<To> v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = static_cast<To>(from[k][i]);
        }
        ++k;
    });
    return dst;
}

}  // namespace sjlstm
