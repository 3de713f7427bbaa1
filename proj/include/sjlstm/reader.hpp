#pragma once

// The speed-reading inference loop. Each token reached is embedded and shown
// to the skip agent; read tokens update the LSTM and consult the jump agent,
// which may move the read position past the next structural boundary.

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sjlstm/agents.hpp"
#include "sjlstm/corpus.hpp"
#include "sjlstm/model.hpp"
#include "sjlstm/nncore.hpp"
#include "sjlstm/rng.hpp"

namespace sjlstm {

enum class AgentOverride : std::uint8_t { None, ForceRead };

/// Fixed action sequence to replay instead of selecting from the policies:
/// one skip action per visited token, one jump action per read.
struct ActionScript {
    std::vector<SkipAction> skips;
    std::vector<JumpAction> jumps;
};

struct ReadOptions {
    ActionMode mode{ActionMode::Greedy};
    bool training{false};  // enables dropout
    double dropout_embed{0.0};
    double dropout_output{0.0};
    AgentOverride agents{AgentOverride::None};
    const ActionScript* script{nullptr};  // replaces `mode` when set
};

template <class T>
struct JumpDecision {
    std::array<T, kJumpActions> dist{};
    JumpAction action{JumpAction::NextWord};
    T logprob{0};
    T value{0};

    bool operator==(const JumpDecision&) const = default;
};

template <class T>
struct StepRecord {
    std::size_t position{0};
    std::array<T, kSkipActions> skip_dist{};
    SkipAction skip_action{SkipAction::Read};
    T skip_logprob{0};
    T skip_value{0};
    std::optional<JumpDecision<T>> jump;  // present iff skip_action == Read
    T reward{0};

    bool operator==(const StepRecord&) const = default;
};

template <class T>
struct Trajectory {
    std::vector<StepRecord<T>> steps;
    std::size_t doc_length{0};
    std::size_t tokens_read{0};
    std::size_t tokens_skipped{0};
    std::size_t tokens_jumped{0};
    bool agents_active{true};  // false under ForceRead: no agent was evaluated
    std::vector<T> terminal_logits;

    bool operator==(const Trajectory&) const = default;
};

/// Forward caches needed to differentiate one episode.
template <class T>
struct StepTape {
    DropoutMask<T> embed_mask;
    DenseCache<T> skip_trunk, skip_policy, skip_value;
    LstmCache<T> lstm;
    DenseCache<T> jump_trunk, jump_policy, jump_value;
};

template <class T>
struct EpisodeTape {
    std::vector<StepTape<T>> steps;
    DropoutMask<T> output_mask;
    DenseCache<T> hidden, out;
    std::vector<T> final_h;
};

template <class T>
struct ReadResult {
    std::vector<T> logits;
    Trajectory<T> trajectory;
};

namespace detail {

template <class T>
std::vector<T> embed_token(const ModelParams<T>& params, const Token& token, const ReadOptions& opt, Rng& rng,
                           DropoutMask<T>* mask) {
    if (token.id >= params.embedding.rows()) {
        throw std::out_of_range("token id " + std::to_string(token.id) + " outside the embedding table");
    }
    return dropout<T>(params.embedding.table.row(token.id), opt.dropout_embed, opt.training, rng, mask);
}

template <class T>
std::vector<T> classify_state(const ModelParams<T>& params, std::span<const T> h, const ReadOptions& opt, Rng& rng,
                              EpisodeTape<T>* tape) {
    const auto o = dropout<T>(h, opt.dropout_output, opt.training, rng, tape ? &tape->output_mask : nullptr);
    const auto hidden = dense_forward<T>(params.classifier.hidden, o, tape ? &tape->hidden : nullptr);
    if (tape != nullptr) {
        tape->final_h.assign(h.begin(), h.end());
    }
    return dense_forward<T>(params.classifier.out, hidden, tape ? &tape->out : nullptr);
}

template <class T>
void require_document(const ModelParams<T>& params, const Document& doc) {
    if (doc.tokens.empty()) {
        throw std::invalid_argument("cannot read an empty document");
    }
    if (doc.jump_table.size() != doc.tokens.size()) {
        throw std::invalid_argument("document jump table does not match its tokens");
    }
    (void)params;
}

}  // namespace detail

/// Plain full-read LSTM classifier over every token. Shares its per-token and
/// classifier code with `read_document`.
template <class T>
std::vector<T> lstm_classifier_forward(const ModelParams<T>& params, const Document& doc, const ReadOptions& opt,
                                       Rng& rng, EpisodeTape<T>* tape = nullptr) {
    detail::require_document(params, doc);
    auto state = LstmState<T>::zeros(params.cell_dim());
    if (tape != nullptr) {
        tape->steps.assign(doc.size(), {});
    }
    for (std::size_t i = 0; i < doc.size(); ++i) {
        StepTape<T>* st = tape ? &tape->steps[i] : nullptr;
        const auto x = detail::embed_token(params, doc.tokens[i], opt, rng, st ? &st->embed_mask : nullptr);
        state = lstm_step<T>(params.lstm, x, state.h, state.c, st ? &st->lstm : nullptr);
    }
    return detail::classify_state(params, std::span<const T>(state.h), opt, rng, tape);
}

template <class T>
ReadResult<T> read_document(const ModelParams<T>& params, const Document& doc, const ReadOptions& opt, Rng& rng,
                            EpisodeTape<T>* tape = nullptr) {
    detail::require_document(params, doc);
    const std::size_t n = doc.size();
    const bool forced = opt.agents == AgentOverride::ForceRead;

    ReadResult<T> result;
    auto& traj = result.trajectory;
    traj.doc_length = n;
    traj.agents_active = !forced;
    if (tape != nullptr) {
        tape->steps.clear();
    }

    auto state = LstmState<T>::zeros(params.cell_dim());
    PrevActionEncoding prev;
    std::size_t i = 0;
    while (i < n) {
        StepTape<T>* st = nullptr;
        if (tape != nullptr) {
            st = &tape->steps.emplace_back();
        }
        StepRecord<T> rec;
        rec.position = i;
        const auto x = detail::embed_token(params, doc.tokens[i], opt, rng, st ? &st->embed_mask : nullptr);

        if (forced) {
            state = lstm_step<T>(params.lstm, x, state.h, state.c, st ? &st->lstm : nullptr);
            rec.skip_dist = {T{0}, T{1}};
            rec.skip_action = SkipAction::Read;
            JumpDecision<T> jd;
            jd.dist = {T{1}, T{0}, T{0}, T{0}};
            rec.jump = jd;
            ++traj.tokens_read;
            traj.steps.push_back(rec);
            ++i;
            continue;
        }

        const auto skip_state =
            skip_trunk<T>(params.skip_agent, x, state.h, prev, st ? &st->skip_trunk : nullptr);
        const auto skip_logits = policy_logits<T>(params.skip_agent, skip_state, st ? &st->skip_policy : nullptr);
        const auto skip_logp = log_softmax<T>(skip_logits);
        const auto skip_p = softmax<T>(skip_logits);
        std::copy(skip_p.begin(), skip_p.end(), rec.skip_dist.begin());
        rec.skip_value = state_value<T>(params.skip_agent, skip_state, st ? &st->skip_value : nullptr);
        const auto skip_idx = opt.script ? index_of(opt.script->skips.at(traj.steps.size()))
                                         : select_action<T>(rec.skip_dist, opt.mode, rng);
        rec.skip_action = static_cast<SkipAction>(skip_idx);
        rec.skip_logprob = skip_logp[skip_idx];

        if (rec.skip_action == SkipAction::Skip) {
            ++traj.tokens_skipped;
            prev = {SkipAction::Skip, std::nullopt};
            traj.steps.push_back(rec);
            ++i;
            continue;
        }

        state = lstm_step<T>(params.lstm, x, state.h, state.c, st ? &st->lstm : nullptr);
        ++traj.tokens_read;

        const auto jump_state = jump_trunk<T>(params.jump_agent, state.h, st ? &st->jump_trunk : nullptr);
        const auto jump_logits = policy_logits<T>(params.jump_agent, jump_state, st ? &st->jump_policy : nullptr);
        const auto jump_logp = log_softmax<T>(jump_logits);
        const auto jump_p = softmax<T>(jump_logits);
        JumpDecision<T> jd;
        std::copy(jump_p.begin(), jump_p.end(), jd.dist.begin());
        jd.value = state_value<T>(params.jump_agent, jump_state, st ? &st->jump_value : nullptr);
        const auto jump_idx = opt.script ? index_of(opt.script->jumps.at(traj.tokens_read - 1))
                                         : select_action<T>(jd.dist, opt.mode, rng);
        jd.action = static_cast<JumpAction>(jump_idx);
        jd.logprob = jump_logp[jump_idx];
        rec.jump = jd;
        traj.steps.push_back(rec);

        const std::size_t next = doc.jump_table.target(i, jd.action);
        traj.tokens_jumped += next - i - 1;
        prev = {SkipAction::Read, jd.action};
        i = next;
    }

    result.logits = detail::classify_state(params, std::span<const T>(state.h), opt, rng, tape);
    traj.terminal_logits = result.logits;
    return result;
}

template <class T>
ActionScript script_of(const Trajectory<T>& traj) {
    ActionScript s;
    for (const auto& step : traj.steps) {
        s.skips.push_back(step.skip_action);
        if (step.jump) {
            s.jumps.push_back(step.jump->action);
        }
    }
    return s;
}

/// Argmax of the logits, lowest index on ties.
template <class T>
std::size_t predict(std::span<const T> logits) {
    return argmax(logits);
}

enum class TokenFate : std::uint8_t { Read, Skipped, Jumped };

template <class T>
std::vector<TokenFate> token_fates(const Trajectory<T>& traj) {
    std::vector<TokenFate> fates(traj.doc_length, TokenFate::Jumped);
    for (const auto& s : traj.steps) {
        fates[s.position] = s.skip_action == SkipAction::Read ? TokenFate::Read : TokenFate::Skipped;
    }
    return fates;
}

/// Surfaces joined by spaces; skipped tokens as `~w~`, jumped spans as `[[ ... ]]`.
template <class T>
std::string format_trace(const Document& doc, const Trajectory<T>& traj) {
    const auto fates = token_fates(traj);
    std::string out;
    bool in_jump = false;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const bool jumped = fates[i] == TokenFate::Jumped;
        if (in_jump && !jumped) {
            out += "]]";
            in_jump = false;
        }
        if (i > 0) {
            out += ' ';
        }
        if (jumped && !in_jump) {
            out += "[[";
            in_jump = true;
        }
        if (fates[i] == TokenFate::Skipped) {
            out += '~' + doc.tokens[i].surface + '~';
        } else {
            out += doc.tokens[i].surface;
        }
    }
    if (in_jump) {
        out += "]]";
    }
    return out;
}

/// Greedy episode rendered with skip/jump markers.
template <class T>
std::string trace(const ModelParams<T>& params, const Document& doc, AgentOverride agents = AgentOverride::None) {
    Rng rng(0);
    ReadOptions opt;
    opt.mode = ActionMode::Greedy;
    opt.agents = agents;
    const auto r = read_document(params, doc, opt, rng);
    return format_trace(doc, r.trajectory);
}

}  // namespace sjlstm
