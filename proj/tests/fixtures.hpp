#pragma once

// Small models, random documents and rigged agents shared by the tests and
// the acceptance runner.

#include <string>
#include <vector>

#include "sjlstm/sjlstm.hpp"

namespace fixtures {

using namespace sjlstm;

inline ModelParams<double> random_model(std::size_t vocab, std::size_t d, std::size_t m, std::size_t classes,
                                        std::uint64_t seed, std::size_t trunk = kAgentTrunkWidth) {
    Rng rng(seed);
    ModelDims dims{vocab, d, m, classes, trunk};
    auto p = init_model<double>(dims, rng);
    // Larger-than-default embeddings and nonzero biases make every path matter.
    for (std::size_t r = 1; r < vocab; ++r) {
        for (auto& v : p.embedding.table.row(r)) v = rng.uniform(-1, 1);
    }
    p.for_each_tensor([&](std::string_view name, const std::vector<std::size_t>&, std::span<double> v) {
        if (name.ends_with(".bias")) {
            for (auto& x : v) x = rng.uniform(-0.3, 0.3);
        }
    });
    return p;
}

/// Tokens "t<id>" with random kinds; ids drawn from [2, vocab).
inline Document random_document(Rng& rng, std::size_t vocab, std::size_t min_len, std::size_t max_len,
                                std::size_t classes = 2) {
    const std::size_t n = min_len + rng.below(max_len - min_len + 1);
    std::vector<Token> tokens;
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = static_cast<TokenId>(2 + rng.below(vocab - 2));
        const auto kind = static_cast<TokenKind>(rng.below(4) == 0 ? 1 + rng.below(2) : 0);
        tokens.push_back({"t" + std::to_string(id), id, kind});
    }
    return make_document(std::move(tokens), rng.below(classes));
}

inline Document text_document(const std::string& text, Vocabulary& vocab, std::size_t label = 0) {
    for (const auto& s : split_surfaces(text)) vocab.add(s);
    return make_document(tokenize(text, vocab), label);
}

/// Agents whose choice is fixed by their policy bias alone.
template <class T>
void rig_agents(ModelParams<T>& p, SkipAction skip, JumpAction jump, T strength = T{50}) {
    warm_start_policy(p.skip_agent, index_of(skip), strength);
    warm_start_policy(p.jump_agent, index_of(jump), strength);
}

}  // namespace fixtures
