#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace sjlstm;
using fixtures::random_document;
using fixtures::random_model;
using fixtures::rig_agents;
using fixtures::text_document;

namespace {

ReadResult<double> run(const ModelParams<double>& p, const Document& doc, ActionMode mode, std::uint64_t seed,
                       AgentOverride agents = AgentOverride::None) {
    Rng rng(seed);
    ReadOptions opt;
    opt.mode = mode;
    opt.agents = agents;
    return read_document(p, doc, opt, rng);
}

}  // namespace

TEST(Reader, ForceReadMatchesPlainClassifier) {
    const auto p = random_model(30, 5, 7, 3, 1);
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const auto doc = random_document(rng, 30, 1, 20, 3);
        const auto r = run(p, doc, ActionMode::Sample, trial, AgentOverride::ForceRead);
        Rng plain_rng(0);
        const auto plain = lstm_classifier_forward(p, doc, ReadOptions{}, plain_rng);
        EXPECT_EQ(r.logits, plain);  // bitwise
        EXPECT_EQ(r.trajectory.tokens_read, doc.size());
        EXPECT_EQ(r.trajectory.tokens_skipped, 0u);
        EXPECT_EQ(r.trajectory.tokens_jumped, 0u);
        EXPECT_FALSE(r.trajectory.agents_active);
    }
}

TEST(Reader, RiggedReadThenJumpToSentenceEnd) {
    Vocabulary v;
    const auto doc = text_document("a b c d .", v);
    auto p = random_model(v.size(), 4, 5, 2, 3);
    rig_agents(p, SkipAction::Read, JumpAction::NextSentEnd);
    const auto r = run(p, doc, ActionMode::Greedy, 0);
    EXPECT_EQ(r.trajectory.tokens_read, 1u);
    EXPECT_EQ(r.trajectory.tokens_jumped, 4u);
    EXPECT_EQ(r.trajectory.tokens_skipped, 0u);
    ASSERT_EQ(r.trajectory.steps.size(), 1u);
    EXPECT_EQ(r.trajectory.steps[0].jump->action, JumpAction::NextSentEnd);
}

TEST(Reader, AlwaysSkipLeavesStateZero) {
    Vocabulary v;
    const auto doc = text_document("one two , three .", v);
    auto p = random_model(v.size(), 4, 5, 2, 4);
    rig_agents(p, SkipAction::Skip, JumpAction::NextWord);
    const auto r = run(p, doc, ActionMode::Greedy, 0);
    EXPECT_EQ(r.trajectory.tokens_skipped, doc.size());
    const std::vector<double> zero(5, 0.0);
    const auto hidden = dense_forward<double>(p.classifier.hidden, zero);
    const auto expected = dense_forward<double>(p.classifier.out, hidden);
    EXPECT_EQ(r.logits, expected);
    for (const auto& s : r.trajectory.steps) {
        EXPECT_FALSE(s.jump.has_value());
    }
}

TEST(Reader, EmptyDocumentRejected) {
    const auto p = random_model(10, 3, 4, 2, 1);
    const Document doc = make_document({}, 0);
    EXPECT_THROW(run(p, doc, ActionMode::Greedy, 0), std::invalid_argument);
}

TEST(Reader, ConservationAndProgressOnRandomEpisodes) {
    Rng rng(77);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto p = random_model(40, 4, 6, 2, seed);
        // Exaggerate head weights so every action gets sampled.
        for (auto& w : p.skip_agent.policy.weight.data) w *= 5;
        for (auto& w : p.jump_agent.policy.weight.data) w *= 5;
        for (int trial = 0; trial < 50; ++trial) {
            const auto doc = random_document(rng, 40, 1, 25);
            const auto r = run(p, doc, ActionMode::Sample, seed * 1000 + trial);
            const auto& t = r.trajectory;
            EXPECT_EQ(t.tokens_read + t.tokens_skipped + t.tokens_jumped, doc.size());
            EXPECT_LE(t.steps.size(), doc.size());
            for (std::size_t k = 0; k < t.steps.size(); ++k) {
                if (k > 0) {
                    EXPECT_GT(t.steps[k].position, t.steps[k - 1].position);
                }
                EXPECT_EQ(t.steps[k].jump.has_value(), t.steps[k].skip_action == SkipAction::Read);
            }
        }
    }
}

TEST(Reader, GreedyRunsAreIdentical) {
    Rng rng(5);
    const auto p = random_model(40, 4, 6, 2, 9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto doc = random_document(rng, 40, 1, 25);
        const auto a = run(p, doc, ActionMode::Greedy, 1);
        const auto b = run(p, doc, ActionMode::Greedy, 2);
        EXPECT_EQ(a.trajectory, b.trajectory);
        EXPECT_EQ(a.logits, b.logits);
    }
}

TEST(Reader, ScriptReplaysActions) {
    Rng rng(6);
    auto p = random_model(40, 4, 6, 2, 10);
    for (auto& w : p.skip_agent.policy.weight.data) w *= 5;
    for (auto& w : p.jump_agent.policy.weight.data) w *= 5;
    for (int trial = 0; trial < 50; ++trial) {
        const auto doc = random_document(rng, 40, 1, 25);
        const auto a = run(p, doc, ActionMode::Sample, trial);
        const auto script = script_of(a.trajectory);
        Rng other(999);
        ReadOptions opt;
        opt.script = &script;
        const auto b = read_document(p, doc, opt, other);
        EXPECT_EQ(a.trajectory, b.trajectory);
    }
}

TEST(Predict, ArgmaxWithTies) {
    const std::vector<double> a{0.1, 2.0}, b{3, 3};
    EXPECT_EQ(predict<double>(a), 1u);
    EXPECT_EQ(predict<double>(b), 0u);
    const std::vector<double> c{0.1 + 7, 2.0 + 7};
    EXPECT_EQ(predict<double>(c), 1u);
}

TEST(Trace, AllReadIsUnchanged) {
    Vocabulary v;
    const auto doc = text_document("a b , c .", v);
    const auto p = random_model(v.size(), 3, 4, 2, 1);
    EXPECT_EQ(trace(p, doc, AgentOverride::ForceRead), "a b , c .");
}

TEST(Trace, SkipMarker) {
    Vocabulary v;
    const auto doc = text_document("a b c", v);
    auto p = random_model(v.size(), 3, 4, 2, 1);
    rig_agents(p, SkipAction::Read, JumpAction::NextWord);
    // Only "b" has a positive first embedding coordinate; the skip trunk's
    // first unit reads it and pushes the Skip logit above the Read bias.
    for (TokenId id = 0; id < v.size(); ++id) p.embedding.table(id, 0) = 0.0;
    p.embedding.table(v.lookup("b"), 0) = 1.0;
    p.skip_agent.trunk.weight.fill(0.0);
    std::fill(p.skip_agent.trunk.bias.begin(), p.skip_agent.trunk.bias.end(), 0.0);
    p.skip_agent.trunk.weight(0, 0) = 1.0;
    p.skip_agent.policy.weight(index_of(SkipAction::Skip), 0) = 100.0;
    EXPECT_EQ(trace(p, doc), "a ~b~ c");
}

TEST(Trace, JumpToEndMarker) {
    Vocabulary v;
    const auto doc = text_document("a b c .", v);
    auto p = random_model(v.size(), 3, 4, 2, 1);
    rig_agents(p, SkipAction::Read, JumpAction::EndOfText);
    EXPECT_EQ(trace(p, doc), "a [[b c .]]");
}

TEST(Trace, FormatOfMixedTrajectory) {
    Vocabulary v;
    const auto doc = text_document("a b , c d . e", v);
    Trajectory<double> t;
    t.doc_length = doc.size();
    auto step = [](std::size_t pos, SkipAction a) {
        StepRecord<double> s;
        s.position = pos;
        s.skip_action = a;
        return s;
    };
    t.steps = {step(0, SkipAction::Read), step(3, SkipAction::Skip), step(4, SkipAction::Read),
               step(6, SkipAction::Read)};
    EXPECT_EQ(format_trace(doc, t), "a [[b ,]] ~c~ d [[.]] e");
}
