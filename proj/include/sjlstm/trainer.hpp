#pragma once

// Two-phase training: supervised full-read pretraining, then advantage
// actor-critic speed-read training of both agents jointly with the LSTM and
// classifier.

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sjlstm/config.hpp"
#include "sjlstm/corpus.hpp"
#include "sjlstm/metrics.hpp"
#include "sjlstm/model.hpp"
#include "sjlstm/nncore.hpp"
#include "sjlstm/parallel.hpp"
#include "sjlstm/reader.hpp"
#include "sjlstm/rng.hpp"

namespace sjlstm {

// ---------------------------------------------------------------------------
// Rewards and returns

/// Reading costs 1/|doc|, skipping c_skip/|doc|. Jumps carry no reward.
template <class T>
T step_reward(SkipAction action, std::size_t doc_len, double c_skip) {
    if (doc_len == 0) {
        throw std::invalid_argument("step_reward: document length must be positive");
    }
    const double n = static_cast<double>(doc_len);
    return static_cast<T>(action == SkipAction::Read ? -1.0 / n : -c_skip / n);
}

template <class T>
void fill_rewards(Trajectory<T>& traj, double c_skip) {
    for (auto& s : traj.steps) {
        s.reward = step_reward<T>(s.skip_action, traj.doc_length, c_skip);
    }
}

/// 1 for a correct prediction, otherwise the probability given to the gold class.
template <class T>
T terminal_bonus(std::size_t predicted, std::size_t target, T p_target) {
    return predicted == target ? T{1} : p_target;
}

/// R_t = bonus + w_rolling * sum_{t' >= t} r_t' (undiscounted suffix sums).
template <class T>
std::vector<T> compute_returns(std::span<const T> rewards, T bonus, double w_rolling) {
    std::vector<T> out(rewards.size());
    T suffix{0};
    for (std::size_t t = rewards.size(); t-- > 0;) {
        suffix += rewards[t];
        out[t] = bonus + static_cast<T>(w_rolling) * suffix;
    }
    return out;
}

template <class T>
struct RewardedTrajectory {
    Trajectory<T> trajectory;
    std::vector<T> returns;
    T terminal_reward{0};
    std::size_t target{0};
    std::size_t predicted{0};
};

template <class T>
RewardedTrajectory<T> reward_trajectory(Trajectory<T> traj, std::size_t target, const TrainConfig& cfg) {
    fill_rewards(traj, cfg.c_skip);
    RewardedTrajectory<T> rt;
    const auto probs = softmax<T>(traj.terminal_logits);
    rt.target = target;
    rt.predicted = predict<T>(traj.terminal_logits);
    rt.terminal_reward = terminal_bonus(rt.predicted, target, probs.at(target));
    std::vector<T> rewards;
    rewards.reserve(traj.steps.size());
    for (const auto& s : traj.steps) {
        rewards.push_back(s.reward);
    }
    rt.returns = compute_returns<T>(rewards, rt.terminal_reward, cfg.w_rolling);
    rt.trajectory = std::move(traj);
    return rt;
}

// ---------------------------------------------------------------------------
// Loss terms

template <class T>
std::array<T, kSkipActions> skip_entropy_target(EntropyTarget t) {
    if (t == EntropyTarget::Uniform) {
        return {T{0.5}, T{0.5}};
    }
    return {T{0.05}, T{0.95}};  // index 1 = Read
}

template <class T>
std::array<T, kJumpActions> jump_entropy_target(EntropyTarget t) {
    if (t == EntropyTarget::Uniform) {
        return {T{0.25}, T{0.25}, T{0.25}, T{0.25}};
    }
    const T rest = static_cast<T>(0.05 / 3.0);
    return {T{0.95}, rest, rest, rest};
}

/// -sum_k q_k log p_k
template <class T>
T cross_entropy(std::span<const T> target, std::span<const T> probs) {
    T acc{0};
    for (std::size_t k = 0; k < target.size(); ++k) {
        if (target[k] > T{0}) {
            acc -= target[k] * std::log(std::max(probs[k], std::numeric_limits<T>::min()));
        }
    }
    return acc;
}

/// Sum over both agents of -log pi(a_t) * (R_t - V_t); the advantage is a constant.
template <class T>
T actor_loss(const RewardedTrajectory<T>& rt) {
    const auto& traj = rt.trajectory;
    if (!traj.agents_active) {
        return T{0};
    }
    T loss{0};
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& s = traj.steps[t];
        loss -= s.skip_logprob * (rt.returns[t] - s.skip_value);
        if (s.jump) {
            loss -= s.jump->logprob * (rt.returns[t] - s.jump->value);
        }
    }
    return loss;
}

template <class T>
T critic_loss(const RewardedTrajectory<T>& rt) {
    const auto& traj = rt.trajectory;
    if (!traj.agents_active) {
        return T{0};
    }
    T loss{0};
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& s = traj.steps[t];
        const T ds = s.skip_value - rt.returns[t];
        loss += ds * ds;
        if (s.jump) {
            const T dj = s.jump->value - rt.returns[t];
            loss += dj * dj;
        }
    }
    return loss;
}

template <class T>
T entropy_loss(const Trajectory<T>& traj, EntropyTarget target) {
    if (!traj.agents_active) {
        return T{0};
    }
    const auto qs = skip_entropy_target<T>(target);
    const auto qj = jump_entropy_target<T>(target);
    T loss{0};
    for (const auto& s : traj.steps) {
        loss += cross_entropy<T>(qs, s.skip_dist);
        if (s.jump) {
            loss += cross_entropy<T>(qj, s.jump->dist);
        }
    }
    return loss;
}

template <class T>
T class_loss(std::span<const T> logits, std::size_t target) {
    return -log_softmax<T>(logits).at(target);
}

struct LossComponents {
    double classification{0};
    double actors{0};
    double critics{0};
    double entropies{0};

    LossComponents& operator+=(const LossComponents& o) {
        classification += o.classification;
        actors += o.actors;
        critics += o.critics;
        entropies += o.entropies;
        return *this;
    }
};

inline double total_loss(const LossComponents& c, const TrainConfig& cfg) {
    return cfg.alpha * c.classification + cfg.beta * c.actors + cfg.gamma * c.critics +
           cfg.entropy_weight * c.entropies;
}

// ---------------------------------------------------------------------------
// Gradients

/// Dense accumulators for every tensor except the embedding table, whose
/// gradient is kept as a list of touched rows.
template <class T>
struct GradientBuffer {
    ModelParams<T> dense;
    std::vector<std::pair<TokenId, std::vector<T>>> embedding_rows;
    bool track_embedding{false};

    GradientBuffer() = default;
    GradientBuffer(const ModelParams<T>& like, bool track) : track_embedding(track) {
        auto dims = like.dims();
        dims.vocab_size = 0;
        dense = ModelParams<T>(dims);
    }

    void clear() {
        dense = ModelParams<T>(dense.dims());
        embedding_rows.clear();
    }
};

/// Adds a buffer into a full-shape gradient (same layout as the params).
template <class T>
void accumulate_gradients(const GradientBuffer<T>& buf, ModelParams<T>& full) {
    std::vector<std::span<const T>> src;
    buf.dense.for_each_tensor(
        [&](std::string_view, const std::vector<std::size_t>&, std::span<const T> v) { src.push_back(v); });
    std::size_t k = 0;
    full.for_each_tensor([&](std::string_view name, const std::vector<std::size_t>&, std::span<T> v) {
        if (name != "embedding") {
            add_into<T>(src[k], v);
        }
        ++k;
    });
    for (const auto& [id, row] : buf.embedding_rows) {
        add_into<T>(row, full.embedding.table.row(id));
    }
}

template <class T>
ModelParams<T> densify(const GradientBuffer<T>& buf, const ModelParams<T>& like) {
    auto full = like.zeros_like();
    accumulate_gradients(buf, full);
    return full;
}

namespace detail {

/// Backpropagates dL/dlogits through the classifier and output dropout;
/// returns dL/dh of the final LSTM output.
template <class T>
std::vector<T> classifier_backward(const ModelParams<T>& params, const EpisodeTape<T>& tape,
                                   std::span<const T> dlogits, ModelParams<T>& grads) {
    const std::size_t m = params.cell_dim();
    std::vector<T> dhidden(m, T{0});
    dense_backward<T>(params.classifier.out, tape.out, dlogits, grads.classifier.out, dhidden);
    std::vector<T> dh(m, T{0});
    dense_backward<T>(params.classifier.hidden, tape.hidden, dhidden, grads.classifier.hidden, dh);
    dropout_backward<T>(tape.output_mask, dh);
    return dh;
}

template <class T>
std::vector<T> class_loss_logit_grad(std::span<const T> logits, std::size_t target, double alpha) {
    auto g = softmax<T>(logits);
    g[target] -= T{1};
    const T a = static_cast<T>(alpha);
    for (auto& v : g) {
        v *= a;
    }
    return g;
}

template <class T>
void embedding_backward(const Token& token, const DropoutMask<T>& mask, std::vector<T> dx, GradientBuffer<T>& buf) {
    if (!buf.track_embedding || token.id == Vocabulary::kPad) {
        return;
    }
    dropout_backward<T>(mask, dx);
    buf.embedding_rows.emplace_back(token.id, std::move(dx));
}

/// dL/dlogits of beta * actor + delta * entropy, and dL/dV of gamma * critic, for
/// one agent decision.
template <class T, std::size_t K>
void agent_decision_backward(const AgentNet<T>& agent, const DenseCache<T>& trunk, const DenseCache<T>& policy,
                             const DenseCache<T>& value, std::size_t action, T ret, T v,
                             const std::array<T, K>& entropy_target, const TrainConfig& cfg, AgentNet<T>& grad,
                             std::span<T> dinput, LossComponents& loss) {
    const auto p = softmax<T>(policy.output);
    const auto logp = log_softmax<T>(policy.output);
    const T advantage = ret - v;  // constant: no gradient through V here
    const T beta = static_cast<T>(cfg.beta);
    const T delta = static_cast<T>(cfg.entropy_weight);
    std::vector<T> dlogits(K);
    for (std::size_t k = 0; k < K; ++k) {
        const T indicator = k == action ? T{1} : T{0};
        dlogits[k] = beta * (-advantage) * (indicator - p[k]) + delta * (p[k] - entropy_target[k]);
    }
    loss.actors += -static_cast<double>(logp[action]) * static_cast<double>(advantage);
    double ce = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        ce -= static_cast<double>(entropy_target[k]) * static_cast<double>(logp[k]);
    }
    loss.entropies += ce;
    const T diff = v - ret;
    loss.critics += static_cast<double>(diff) * static_cast<double>(diff);
    const std::array<T, 1> dv{static_cast<T>(cfg.gamma) * T{2} * diff};

    std::vector<T> dstate(agent.trunk.out(), T{0});
    dense_backward<T>(agent.policy, policy, dlogits, grad.policy, dstate);
    dense_backward<T>(agent.value, value, dv, grad.value, dstate);
    dense_backward<T>(agent.trunk, trunk, dstate, grad.trunk, dinput);
}

}  // namespace detail

/// Gradient of alpha * L_class for the plain full-read classifier, given the
/// tape from `lstm_classifier_forward`.
template <class T>
LossComponents lstm_classifier_backward(const ModelParams<T>& params, const Document& doc,
                                        const EpisodeTape<T>& tape, double alpha, GradientBuffer<T>& buf) {
    const auto& logits = tape.out.output;
    LossComponents loss;
    loss.classification = static_cast<double>(class_loss<T>(logits, doc.label));
    const auto dlogits = detail::class_loss_logit_grad<T>(logits, doc.label, alpha);
    auto dh = detail::classifier_backward(params, tape, std::span<const T>(dlogits), buf.dense);
    std::vector<T> dc(params.cell_dim(), T{0});
    std::vector<T> dh_prev(params.cell_dim());
    std::vector<T> dc_prev(params.cell_dim());
    for (std::size_t t = tape.steps.size(); t-- > 0;) {
        const auto& st = tape.steps[t];
        std::vector<T> dx(params.embed_dim(), T{0});
        lstm_backward<T>(params.lstm, st.lstm, dh, dc, buf.dense.lstm, dx, dh_prev, dc_prev);
        std::swap(dh, dh_prev);
        std::swap(dc, dc_prev);
        detail::embedding_backward(doc.tokens[t], st.embed_mask, std::move(dx), buf);
    }
    return loss;
}

/// Gradient of the total loss for one recorded episode. Sampled actions and
/// advantages are constants.
template <class T>
LossComponents episode_backward(const ModelParams<T>& params, const Document& doc, const EpisodeTape<T>& tape,
                                const RewardedTrajectory<T>& rt, const TrainConfig& cfg, GradientBuffer<T>& buf) {
    const auto& traj = rt.trajectory;
    const auto& logits = tape.out.output;
    LossComponents loss;
    loss.classification = static_cast<double>(class_loss<T>(logits, doc.label));
    const auto dlogits = detail::class_loss_logit_grad<T>(logits, doc.label, cfg.alpha);
    auto dh = detail::classifier_backward(params, tape, std::span<const T>(dlogits), buf.dense);

    const std::size_t d = params.embed_dim();
    const std::size_t m = params.cell_dim();
    const auto q_skip = skip_entropy_target<T>(cfg.entropy_target);
    const auto q_jump = jump_entropy_target<T>(cfg.entropy_target);
    std::vector<T> dc(m, T{0});
    std::vector<T> dh_prev(m);
    std::vector<T> dc_prev(m);
    std::vector<T> dz(d + m + kPrevActionSlots);

    for (std::size_t t = traj.steps.size(); t-- > 0;) {
        const auto& rec = traj.steps[t];
        const auto& st = tape.steps[t];
        const T ret = rt.returns[t];
        std::vector<T> dx(d, T{0});
        if (rec.skip_action == SkipAction::Read) {
            if (traj.agents_active) {
                // The jump agent saw the state produced by this read.
                detail::agent_decision_backward<T, kJumpActions>(
                    params.jump_agent, st.jump_trunk, st.jump_policy, st.jump_value, index_of(rec.jump->action), ret,
                    rec.jump->value, q_jump, cfg, buf.dense.jump_agent, std::span<T>(dh), loss);
            }
            lstm_backward<T>(params.lstm, st.lstm, dh, dc, buf.dense.lstm, dx, dh_prev, dc_prev);
            std::swap(dh, dh_prev);
            std::swap(dc, dc_prev);
        }
        if (traj.agents_active) {
            std::fill(dz.begin(), dz.end(), T{0});
            detail::agent_decision_backward<T, kSkipActions>(params.skip_agent, st.skip_trunk, st.skip_policy,
                                                             st.skip_value, index_of(rec.skip_action), ret,
                                                             rec.skip_value, q_skip, cfg, buf.dense.skip_agent,
                                                             std::span<T>(dz), loss);
            add_into<T>(std::span<const T>(dz).first(d), dx);
            add_into<T>(std::span<const T>(dz).subspan(d, m), dh);
        }
        detail::embedding_backward(doc.tokens[rec.position], st.embed_mask, std::move(dx), buf);
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Training loops

enum class Phase : std::uint8_t { Pretrain = 1, SpeedRead = 2, Eval = 3 };

/// Stream seed for one example in one epoch of one phase.
inline std::uint64_t example_seed(std::uint64_t run_seed, Phase phase, std::size_t epoch, std::size_t example) {
    return derive_seed(run_seed, (static_cast<std::uint64_t>(phase) << 32) | epoch, example);
}

struct BatchStats {
    std::size_t epoch{0};
    std::size_t batch{0};
    double loss{0};
    std::size_t examples{0};
    std::size_t correct{0};
    std::size_t read{0};
    std::size_t skipped{0};
    std::size_t jumped{0};

    double accuracy() const { return examples ? static_cast<double>(correct) / examples : 0.0; }
    double read_pct() const { return 100.0 * read / std::max<std::size_t>(1, read + skipped + jumped); }
    double jump_pct() const { return 100.0 * jumped / std::max<std::size_t>(1, read + skipped + jumped); }
};

/// `epoch batch loss acc read% jump%`, tab-separated.
inline std::string format_batch_line(const BatchStats& s) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu\t%zu\t%.6f\t%.4f\t%.1f\t%.1f", s.epoch, s.batch, s.loss, s.accuracy(),
                  s.read_pct(), s.jump_pct());
    return buf;
}

using LineSink = std::function<void(const std::string&)>;

namespace detail {

inline constexpr std::size_t kGroupSize = 8;

inline bool tensor_trained(std::string_view name, Phase phase, bool embedding_trainable) {
    if (name == "embedding") {
        return phase == Phase::Pretrain && embedding_trainable;
    }
    if (phase == Phase::Pretrain) {
        return !name.starts_with("skip_agent") && !name.starts_with("jump_agent");
    }
    return true;
}

template <class T>
struct GroupResult {
    GradientBuffer<T> grads;
    BatchStats stats;
};

/// One optimizer step over `batch` (indices into docs). Work is split into
/// fixed groups whose partial sums are reduced in order, so the result does
/// not depend on the number of threads.
template <class T>
BatchStats train_batch(ModelParams<T>& params, std::span<const Document> docs, std::span<const std::size_t> batch,
                       const TrainConfig& cfg, Phase phase, std::size_t epoch, RmsProp<T>& opt,
                       ModelParams<T>& full_grad) {
    const bool track_embedding = phase == Phase::Pretrain && params.embedding.trainable;
    const std::size_t groups = (batch.size() + kGroupSize - 1) / kGroupSize;
    std::vector<GroupResult<T>> results(groups);

    ReadOptions ropt;
    ropt.training = true;
    ropt.dropout_embed = cfg.dropout_embed;
    ropt.dropout_output = cfg.dropout_output;
    ropt.mode = ActionMode::Sample;
    ropt.agents = phase == Phase::Pretrain ? AgentOverride::ForceRead : AgentOverride::None;

    parallel_for(groups, [&](std::size_t g) {
        auto& res = results[g];
        res.grads = GradientBuffer<T>(params, track_embedding);
        const std::size_t begin = g * kGroupSize;
        const std::size_t end = std::min(batch.size(), begin + kGroupSize);
        for (std::size_t b = begin; b < end; ++b) {
            const std::size_t idx = batch[b];
            const Document& doc = docs[idx];
            Rng rng(example_seed(cfg.seed, phase, epoch, idx));
            EpisodeTape<T> tape;
            auto rr = read_document(params, doc, ropt, rng, &tape);
            auto rt = reward_trajectory(std::move(rr.trajectory), doc.label, cfg);
            const auto parts = episode_backward(params, doc, tape, rt, cfg, res.grads);
            res.stats.loss += total_loss(parts, cfg);
            res.stats.examples += 1;
            res.stats.correct += rt.predicted == doc.label ? 1 : 0;
            res.stats.read += rt.trajectory.tokens_read;
            res.stats.skipped += rt.trajectory.tokens_skipped;
            res.stats.jumped += rt.trajectory.tokens_jumped;
        }
    });

    full_grad.for_each_tensor([](std::string_view, const std::vector<std::size_t>&, std::span<T> v) {
        std::fill(v.begin(), v.end(), T{0});
    });
    BatchStats stats;
    for (auto& r : results) {
        accumulate_gradients(r.grads, full_grad);
        stats.loss += r.stats.loss;
        stats.examples += r.stats.examples;
        stats.correct += r.stats.correct;
        stats.read += r.stats.read;
        stats.skipped += r.stats.skipped;
        stats.jumped += r.stats.jumped;
    }
    stats.loss /= static_cast<double>(batch.size());

    std::vector<std::span<T>> p_spans;
    std::vector<std::span<T>> g_spans;
    auto p_tensors = params.tensors();
    auto g_tensors = full_grad.tensors();
    const T inv_batch = static_cast<T>(1.0 / static_cast<double>(batch.size()));
    for (std::size_t k = 0; k < p_tensors.size(); ++k) {
        if (!tensor_trained(p_tensors[k].name, phase, params.embedding.trainable)) {
            continue;
        }
        for (auto& v : g_tensors[k].values) {
            v *= inv_batch;
        }
        p_spans.push_back(p_tensors[k].values);
        g_spans.push_back(g_tensors[k].values);
    }
    clip_gradients<T>(g_spans, cfg.clip);
    opt.step(p_spans, g_spans);
    // PAD row stays zero.
    std::fill(params.embedding.table.row(Vocabulary::kPad).begin(), params.embedding.table.row(Vocabulary::kPad).end(),
              T{0});
    return stats;
}

template <class T>
void run_epoch(ModelParams<T>& params, std::span<const Document> train, const TrainConfig& cfg, Phase phase,
               std::size_t epoch, RmsProp<T>& opt, ModelParams<T>& full_grad, const LineSink& log,
               BatchStats* epoch_totals) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5eed0000ULL | static_cast<std::uint64_t>(phase), epoch));
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t len = std::min(cfg.batch_size, order.size() - start);
        auto stats = train_batch(params, train, std::span<const std::size_t>(order).subspan(start, len), cfg, phase,
                                 epoch, opt, full_grad);
        stats.epoch = epoch;
        stats.batch = ++batch_no;
        if (log) {
            log(format_batch_line(stats));
        }
        if (epoch_totals != nullptr) {
            epoch_totals->examples += stats.examples;
            epoch_totals->correct += stats.correct;
            epoch_totals->read += stats.read;
            epoch_totals->skipped += stats.skipped;
            epoch_totals->jumped += stats.jumped;
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Evaluation

struct Evaluation {
    EvalTally tally;
    std::vector<std::size_t> predictions;
};

template <class T>
Evaluation evaluate(const ModelParams<T>& params, std::span<const Document> docs, ActionMode mode,
                    AgentOverride agents, std::uint64_t seed) {
    struct One {
        std::size_t predicted{0};
        std::size_t read{0}, skipped{0}, jumped{0};
        FlopCount full{0}, speed{0};
    };
    std::vector<One> out(docs.size());
    const auto cost = CostModel::from(params.dims());
    parallel_for(docs.size(), [&](std::size_t i) {
        Rng rng(example_seed(seed, Phase::Eval, 0, i));
        ReadOptions opt;
        opt.mode = mode;
        opt.agents = agents;
        const auto r = read_document(params, docs[i], opt, rng);
        auto& o = out[i];
        o.predicted = predict<T>(r.logits);
        o.read = r.trajectory.tokens_read;
        o.skipped = r.trajectory.tokens_skipped;
        o.jumped = r.trajectory.tokens_jumped;
        o.speed = episode_flops(r.trajectory, cost).total();
        o.full = docs[i].size() * flops_lstm_step(cost) + flops_classifier(cost);
    });
    Evaluation ev;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto& o = out[i];
        ev.predictions.push_back(o.predicted);
        ev.tally.examples += 1;
        ev.tally.correct += o.predicted == docs[i].label ? 1 : 0;
        ev.tally.read += o.read;
        ev.tally.skipped += o.skipped;
        ev.tally.jumped += o.jumped;
        ev.tally.flops_full += o.full;
        ev.tally.flops_speed += o.speed;
    }
    return ev;
}

// ---------------------------------------------------------------------------
// Phases

template <class T>
struct PretrainResult {
    ModelParams<T> params;
    std::vector<double> valid_accuracy;  // per epoch
    std::size_t best_epoch{0};
};

/// Full-read supervised training; keeps the epoch with the best validation
/// accuracy (the last epoch when no validation set is given).
template <class T>
PretrainResult<T> pretrain(ModelParams<T> params, std::span<const Document> train, std::span<const Document> valid,
                           const TrainConfig& cfg, const LineSink& log = {}) {
    if (train.empty()) {
        throw std::invalid_argument("pretrain: empty training set");
    }
    cfg.validate();
    params.embedding.trainable = true;
    RmsProp<T> opt(cfg.learning_rate);
    auto full_grad = params.zeros_like();
    PretrainResult<T> result;
    double best = -1.0;
    for (std::size_t epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
        detail::run_epoch(params, train, cfg, Phase::Pretrain, epoch, opt, full_grad, log, nullptr);
        double acc = 0.0;
        if (!valid.empty()) {
            acc = evaluate(params, valid, ActionMode::Greedy, AgentOverride::ForceRead, cfg.seed).tally.accuracy();
        }
        result.valid_accuracy.push_back(acc);
        if (valid.empty() || acc > best) {
            best = acc;
            result.params = params;
            result.best_epoch = epoch;
        }
    }
    if (cfg.pretrain_epochs == 0) {
        result.params = params;
    }
    return result;
}

/// Agent warm start: zero head weights, `warm_start_bias` on Read and NextWord.
template <class T>
void warm_start_agents(ModelParams<T>& params, double bias) {
    warm_start_policy(params.skip_agent, index_of(SkipAction::Read), static_cast<T>(bias));
    warm_start_policy(params.jump_agent, index_of(JumpAction::NextWord), static_cast<T>(bias));
}

struct SpeedReadEpoch {
    std::size_t epoch{0};
    double train_accuracy{0};
    double train_read_pct{0};
    double train_jump_pct{0};
    double valid_accuracy{0};
    double valid_read_pct{0};
    double valid_jump_pct{0};
};

template <class T>
struct SpeedReadResult {
    ModelParams<T> params;
    std::vector<SpeedReadEpoch> epochs;
};

/// Joint actor-critic training with frozen embeddings and sampled actions.
template <class T>
SpeedReadResult<T> speedread_train(ModelParams<T> params, std::span<const Document> train,
                                   std::span<const Document> valid, const TrainConfig& cfg,
                                   const LineSink& log = {}) {
    if (train.empty()) {
        throw std::invalid_argument("speedread_train: empty training set");
    }
    cfg.validate();
    warm_start_agents(params, cfg.warm_start_bias);
    params.embedding.trainable = false;
    RmsProp<T> opt(cfg.learning_rate);
    auto full_grad = params.zeros_like();
    SpeedReadResult<T> result;
    for (std::size_t epoch = 1; epoch <= cfg.speedread_epochs; ++epoch) {
        BatchStats totals;
        detail::run_epoch(params, train, cfg, Phase::SpeedRead, epoch, opt, full_grad, log, &totals);
        SpeedReadEpoch e;
        e.epoch = epoch;
        e.train_accuracy = totals.accuracy();
        e.train_read_pct = totals.read_pct();
        e.train_jump_pct = totals.jump_pct();
        if (!valid.empty()) {
            const auto ev = evaluate(params, valid, cfg.action_mode, AgentOverride::None, cfg.seed);
            const auto s = ev.tally.stats();
            e.valid_accuracy = ev.tally.accuracy();
            e.valid_read_pct = s.read_pct;
            e.valid_jump_pct = s.jump_pct;
        }
        result.epochs.push_back(e);
    }
    result.params = std::move(params);
    return result;
}

}  // namespace sjlstm
