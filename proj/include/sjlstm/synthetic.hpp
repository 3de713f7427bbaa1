#pragma once

// Generated two-class corpus whose label is fixed by a keyword in the first
// sentence. Later sentences are filler, so a reader that stops after the
// first sentence loses nothing.

#include <string>
#include <vector>

#include "sjlstm/corpus.hpp"
#include "sjlstm/rng.hpp"

namespace sjlstm {

struct SyntheticSpec {
    std::size_t documents{1000};
    std::size_t sentences{3};
    std::size_t min_words{5};
    std::size_t max_words{9};
    std::size_t filler_vocab{200};
    double comma_rate{0.3};  // chance of a sub-sentence break inside a sentence
    std::uint64_t seed{1};
};

inline const std::array<std::string, 2>& synthetic_keywords() {
    static const std::array<std::string, 2> k{"dreadful", "splendid"};
    return k;
}

inline std::vector<LabeledText> generate_keyword_corpus(const SyntheticSpec& spec) {
    Rng rng(spec.seed);
    auto filler = [&]() { return "w" + std::to_string(rng.below(spec.filler_vocab)); };
    auto sentence = [&](const std::string* keyword) {
        const std::size_t len = spec.min_words + rng.below(spec.max_words - spec.min_words + 1);
        const std::size_t key_at = keyword ? rng.below(len) : len;
        const std::size_t comma_at = rng.uniform() < spec.comma_rate ? 1 + rng.below(len - 1) : len;
        std::string s;
        for (std::size_t w = 0; w < len; ++w) {
            if (w > 0) {
                s += w == comma_at ? ", " : " ";
            }
            s += w == key_at ? *keyword : filler();
        }
        return s + " .";
    };
    std::vector<LabeledText> rows;
    rows.reserve(spec.documents);
    for (std::size_t i = 0; i < spec.documents; ++i) {
        const std::size_t label = rng.below(2);
        std::string text = sentence(&synthetic_keywords()[label]);
        for (std::size_t s = 1; s < spec.sentences; ++s) {
            text += " " + sentence(nullptr);
        }
        rows.push_back({std::to_string(label), std::move(text), i + 1});
    }
    return rows;
}

}  // namespace sjlstm
