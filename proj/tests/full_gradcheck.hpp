#pragma once

// Finite-difference check of the whole training objective for one episode
// with its sampled actions, dropout masks and returns held fixed.

#include <string>

#include "fixtures.hpp"
#include "gradcheck.hpp"

namespace fixtures {

/// Objective rebuilt from forward quantities only, with advantages and
/// returns taken from the unperturbed episode.
inline double frozen_objective(const ModelParams<double>& p, const Document& doc, const ActionScript& script,
                               const RewardedTrajectory<double>& base, const TrainConfig& cfg,
                               std::uint64_t dropout_seed) {
    Rng rng(dropout_seed);
    ReadOptions opt;
    opt.training = true;
    opt.dropout_embed = cfg.dropout_embed;
    opt.dropout_output = cfg.dropout_output;
    opt.script = &script;
    const auto r = read_document(p, doc, opt, rng);
    const auto qs = skip_entropy_target<double>(cfg.entropy_target);
    const auto qj = jump_entropy_target<double>(cfg.entropy_target);
    double loss = cfg.alpha * class_loss<double>(r.logits, doc.label);
    const auto& steps = r.trajectory.steps;
    for (std::size_t t = 0; t < steps.size(); ++t) {
        const auto& s = steps[t];
        const auto& b = base.trajectory.steps[t];
        const double ret = base.returns[t];
        loss += cfg.beta * -s.skip_logprob * (ret - b.skip_value);
        loss += cfg.gamma * (s.skip_value - ret) * (s.skip_value - ret);
        loss += cfg.entropy_weight * cross_entropy<double>(qs, s.skip_dist);
        if (s.jump) {
            loss += cfg.beta * -s.jump->logprob * (ret - b.jump->value);
            loss += cfg.gamma * (s.jump->value - ret) * (s.jump->value - ret);
            loss += cfg.entropy_weight * cross_entropy<double>(qj, s.jump->dist);
        }
    }
    return loss;
}

struct FullCheckResult {
    double worst_rel{0};
    std::string worst_tensor;
    std::size_t steps{0};
    std::size_t reads{0};
};

/// Toy dims: d=4, m=6, trunk 3. One sampled episode per seed.
inline FullCheckResult full_model_gradcheck(std::uint64_t seed, EntropyTarget target = EntropyTarget::Uniform) {
    const std::size_t vocab = 12;
    auto p = random_model(vocab, 4, 6, 3, seed, 3);
    for (auto& w : p.skip_agent.policy.weight.data) w *= 4;
    for (auto& w : p.jump_agent.policy.weight.data) w *= 4;
    p.skip_agent.policy.bias[index_of(SkipAction::Read)] += 1.0;
    p.jump_agent.policy.bias[index_of(JumpAction::NextWord)] += 1.0;
    Rng doc_rng(seed * 7919 + 1);
    const auto doc = random_document(doc_rng, vocab, 6, 12, 3);

    TrainConfig cfg;
    cfg.entropy_target = target;
    cfg.dropout_embed = 0.2;
    cfg.dropout_output = 0.2;

    const std::uint64_t action_seed = seed * 31 + 5;
    Rng sample_rng(action_seed);
    ReadOptions sample_opt;
    sample_opt.mode = ActionMode::Sample;
    const auto sampled = read_document(p, doc, sample_opt, sample_rng);
    const auto script = script_of(sampled.trajectory);

    const std::uint64_t dropout_seed = seed * 131 + 17;
    Rng rng(dropout_seed);
    ReadOptions opt;
    opt.training = true;
    opt.dropout_embed = cfg.dropout_embed;
    opt.dropout_output = cfg.dropout_output;
    opt.script = &script;
    EpisodeTape<double> tape;
    auto rr = read_document(p, doc, opt, rng, &tape);
    const auto rt = reward_trajectory(std::move(rr.trajectory), doc.label, cfg);
    GradientBuffer<double> buf(p, true);
    episode_backward(p, doc, tape, rt, cfg, buf);
    auto grads = densify(buf, p);

    FullCheckResult out;
    out.steps = rt.trajectory.steps.size();
    out.reads = rt.trajectory.tokens_read;
    auto loss = [&] { return frozen_objective(p, doc, script, rt, cfg, dropout_seed); };
    auto pt = p.tensors();
    auto gt = grads.tensors();
    for (std::size_t k = 0; k < pt.size(); ++k) {
        const auto m = gradcheck::check(pt[k].values, gt[k].values, loss);
        if (m.worst_rel > out.worst_rel) {
            out.worst_rel = m.worst_rel;
            out.worst_tensor = pt[k].name + "[" + std::to_string(m.index) + "]";
        }
    }
    return out;
}

}  // namespace fixtures
