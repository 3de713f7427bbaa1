#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "sjlstm/nncore.hpp"

using namespace sjlstm;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) {
        x = rng.uniform(-scale, scale);
    }
    return v;
}

void randomize(std::span<double> v, Rng& rng, double scale = 1.0) {
    for (auto& x : v) {
        x = rng.uniform(-scale, scale);
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

// Scalar reference LSTM step, written independently of the matrix kernels.
void reference_lstm(const LstmCell<double>& cell, const std::vector<double>& x, const std::vector<double>& h,
                    const std::vector<double>& c, std::vector<double>& h_out, std::vector<double>& c_out) {
    const std::size_t d = cell.input_dim;
    const std::size_t m = cell.cell_dim;
    auto pre = [&](std::size_t gate, std::size_t k) {
        const std::size_t row = gate * m + k;
        double s = cell.bias[row];
        for (std::size_t j = 0; j < d; ++j) s += cell.weight(row, j) * x[j];
        for (std::size_t j = 0; j < m; ++j) s += cell.weight(row, d + j) * h[j];
        return s;
    };
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    h_out.assign(m, 0);
    c_out.assign(m, 0);
    for (std::size_t k = 0; k < m; ++k) {
        const double i = sig(pre(0, k));
        const double f = sig(pre(1, k));
        const double o = sig(pre(2, k));
        const double g = std::tanh(pre(3, k));
        c_out[k] = f * c[k] + i * g;
        h_out[k] = o * std::tanh(c_out[k]);
    }
}

}  // namespace

TEST(Dense, IdentityLinear) {
    Dense<double> l(2, 2, Activation::Linear);
    l.weight(0, 0) = 1;
    l.weight(1, 1) = 1;
    const std::vector<double> x{3, -2};
    EXPECT_EQ(dense_forward<double>(l, x), (std::vector<double>{3, -2}));
}

TEST(Dense, ReluClamp) {
    Dense<double> l(2, 1, Activation::ReLU);
    l.weight.fill(1);
    l.bias = {-5};
    const std::vector<double> x{2, 2};
    EXPECT_EQ(dense_forward<double>(l, x), (std::vector<double>{0}));
}

TEST(Dense, ScalarAffine) {
    Dense<double> l(1, 1, Activation::Linear);
    l.weight(0, 0) = 2;
    l.bias = {1};
    const std::vector<double> x{3};
    EXPECT_EQ(dense_forward<double>(l, x), (std::vector<double>{7}));
}

TEST(Dense, ShapeMismatchThrows) {
    Dense<double> l(3, 1, Activation::Linear);
    const std::vector<double> x{1, 2};
    EXPECT_THROW(dense_forward<double>(l, x), ShapeError);
}

TEST(Dense, SumLossGradientIsAnalytic) {
    Dense<double> l(3, 2, Activation::Linear);
    Rng rng(1);
    glorot_init(l, rng);
    const std::vector<double> x{0.5, -1.0, 2.0};
    DenseCache<double> cache;
    dense_forward<double>(l, x, &cache);
    Dense<double> g(3, 2, Activation::Linear);
    const std::vector<double> dy{1, 1};
    dense_backward<double>(l, cache, dy, g, {});
    for (std::size_t r = 0; r < 2; ++r) {
        EXPECT_EQ(g.bias[r], 1.0);
        for (std::size_t c = 0; c < 3; ++c) {
            EXPECT_EQ(g.weight(r, c), x[c]);
        }
    }
}

TEST(Dense, ZeroUpstreamGivesZeroGradients) {
    Dense<double> l(3, 2, Activation::ReLU);
    Rng rng(2);
    glorot_init(l, rng);
    const auto x = random_vector(3, rng);
    DenseCache<double> cache;
    dense_forward<double>(l, x, &cache);
    Dense<double> g(3, 2, Activation::ReLU);
    std::vector<double> dx(3, 0);
    const std::vector<double> dy{0, 0};
    dense_backward<double>(l, cache, dy, g, dx);
    for (double v : g.weight.data) EXPECT_EQ(v, 0);
    for (double v : g.bias) EXPECT_EQ(v, 0);
    for (double v : dx) EXPECT_EQ(v, 0);
}

TEST(Dense, FiniteDifferenceGradients) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (auto act : {Activation::Linear, Activation::ReLU}) {
            Rng rng(seed);
            Dense<double> l(5, 4, act);
            glorot_init(l, rng);
            randomize(l.bias, rng, 0.5);
            auto x = random_vector(5, rng);
            const auto proj = random_vector(4, rng);
            auto loss = [&] { return dot(dense_forward<double>(l, x), proj); };
            DenseCache<double> cache;
            dense_forward<double>(l, x, &cache);
            Dense<double> g(5, 4, act);
            std::vector<double> dx(5, 0);
            dense_backward<double>(l, cache, proj, g, dx);
            EXPECT_LT(gradcheck::check(l.weight.data, g.weight.data, loss).worst_rel, 1e-4) << seed;
            EXPECT_LT(gradcheck::check(l.bias, g.bias, loss).worst_rel, 1e-4) << seed;
            EXPECT_LT(gradcheck::check(x, dx, loss).worst_rel, 1e-4) << seed;
        }
    }
}

TEST(Lstm, ZeroWeightsGiveZeroState) {
    LstmCell<double> cell(3, 4);
    const std::vector<double> x{1, 2, 3}, h(4, 0.0), c(4, 0.0);
    const auto s = lstm_step<double>(cell, x, h, c);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(s.c[k], 0.0);
        EXPECT_EQ(s.h[k], 0.0);
    }
}

TEST(Lstm, SaturatedForgetGateKeepsCell) {
    LstmCell<double> cell(2, 3);
    for (std::size_t k = 0; k < 3; ++k) {
        cell.bias[3 + k] = 1e3;  // forget gate block
    }
    const std::vector<double> x{0.4, -0.7}, h{0.1, 0.2, 0.3}, c{0.5, -1.5, 2.0};
    const auto s = lstm_step<double>(cell, x, h, c);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(s.c[k], c[k], 1e-12);
    }
}

TEST(Lstm, MatchesScalarReference) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        LstmCell<double> cell(2, 3);
        randomize(cell.weight.data, rng);
        randomize(cell.bias, rng);
        const auto x = random_vector(2, rng), h = random_vector(3, rng), c = random_vector(3, rng);
        std::vector<double> h_ref, c_ref;
        reference_lstm(cell, x, h, c, h_ref, c_ref);
        const auto s = lstm_step<double>(cell, x, h, c);
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_NEAR(s.h[k], h_ref[k], 1e-14);
            EXPECT_NEAR(s.c[k], c_ref[k], 1e-14);
        }
    }
}

TEST(Lstm, BoundedOutputOnZeroInput) {
    Rng rng(5);
    LstmCell<double> cell(3, 5);
    randomize(cell.weight.data, rng, 3.0);
    randomize(cell.bias, rng, 3.0);
    auto s = LstmState<double>::zeros(5);
    const std::vector<double> x(3, 0.0);
    for (int t = 0; t < 200; ++t) {
        s = lstm_step<double>(cell, x, s.h, s.c);
        for (double v : s.h) {
            ASSERT_LE(std::abs(v), 1.0);
        }
    }
}

TEST(Lstm, FiniteDifferenceGradients) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        LstmCell<double> cell(4, 6);
        glorot_init(cell, rng);
        randomize(cell.bias, rng, 0.5);
        auto x = random_vector(4, rng), h = random_vector(6, rng), c = random_vector(6, rng);
        const auto ph = random_vector(6, rng), pc = random_vector(6, rng);
        auto loss = [&] {
            const auto s = lstm_step<double>(cell, x, h, c);
            return dot(s.h, ph) + dot(s.c, pc);
        };
        LstmCache<double> cache;
        lstm_step<double>(cell, x, h, c, &cache);
        LstmCell<double> g(4, 6);
        std::vector<double> dx(4), dh(6), dc(6);
        lstm_backward<double>(cell, cache, ph, pc, g, dx, dh, dc);
        EXPECT_LT(gradcheck::check(cell.weight.data, g.weight.data, loss).worst_rel, 1e-4) << seed;
        EXPECT_LT(gradcheck::check(cell.bias, g.bias, loss).worst_rel, 1e-4) << seed;
        EXPECT_LT(gradcheck::check(x, dx, loss).worst_rel, 1e-4) << seed;
        EXPECT_LT(gradcheck::check(h, dh, loss).worst_rel, 1e-4) << seed;
        EXPECT_LT(gradcheck::check(c, dc, loss).worst_rel, 1e-4) << seed;
    }
}

TEST(Softmax, Examples) {
    const std::vector<double> a{0, 0}, b{1000, 1000}, c{std::log(1.0), std::log(3.0)};
    EXPECT_EQ(softmax<double>(a), (std::vector<double>{0.5, 0.5}));
    EXPECT_EQ(softmax<double>(b), (std::vector<double>{0.5, 0.5}));
    const auto p = softmax<double>(c);
    EXPECT_NEAR(p[0], 0.25, 1e-15);
    EXPECT_NEAR(p[1], 0.75, 1e-15);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
    Rng rng(9);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto logits = random_vector(1 + rng.below(6), rng, 50.0);
        const auto p = softmax<double>(logits);
        double s = 0;
        for (double v : p) {
            EXPECT_GT(v, 0.0 - 1e-300);
            s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-6);
        auto shifted = logits;
        const double k = rng.uniform(-100, 100);
        for (auto& v : shifted) v += k;
        const auto q = softmax<double>(shifted);
        for (std::size_t i = 0; i < p.size(); ++i) {
            EXPECT_NEAR(p[i], q[i], 1e-9);
        }
    }
}

TEST(Softmax, LogSoftmaxAgrees) {
    const std::vector<double> l{0.3, -1.2, 2.5};
    const auto p = softmax<double>(l);
    const auto lp = log_softmax<double>(l);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(std::exp(lp[i]), p[i], 1e-15);
    }
}

TEST(Clip, BelowThresholdUnchanged) {
    std::vector<double> g{0.03, 0.04};
    std::vector<std::span<double>> t{g};
    EXPECT_NEAR(clip_gradients<double>(t, 0.1), 0.05, 1e-15);
    EXPECT_EQ(g, (std::vector<double>{0.03, 0.04}));
}

TEST(Clip, ScalesToThreshold) {
    std::vector<double> g{0.3, 0.4};
    std::vector<std::span<double>> t{g};
    clip_gradients<double>(t, 0.1);
    EXPECT_NEAR(g[0], 0.06, 1e-15);
    EXPECT_NEAR(g[1], 0.08, 1e-15);
}

TEST(Clip, ZeroStaysZero) {
    std::vector<double> g(4, 0.0);
    std::vector<std::span<double>> t{g};
    clip_gradients<double>(t, 0.1);
    for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Clip, NeverIncreasesNormAndKeepsDirection) {
    Rng rng(4);
    for (int trial = 0; trial < 500; ++trial) {
        auto a = random_vector(3, rng, rng.uniform(0, 1)), b = random_vector(5, rng, rng.uniform(0, 1));
        const auto a0 = a, b0 = b;
        std::vector<std::span<double>> t{a, b};
        const double before = global_norm<double>(t);
        clip_gradients<double>(t, 0.1);
        const double after = global_norm<double>(t);
        EXPECT_LE(after, before + 1e-15);
        EXPECT_LE(after, 0.1 + 1e-12);
        const double k = before > 0.1 ? 0.1 / before : 1.0;
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], k * a0[i], 1e-15);
        for (std::size_t i = 0; i < b.size(); ++i) EXPECT_NEAR(b[i], k * b0[i], 1e-15);
    }
}

TEST(RmsProp, ZeroGradientLeavesParamAndDecaysAverage) {
    RmsProp<double> opt(0.001);
    std::vector<double> p{1.0}, g{1.0};
    std::vector<std::span<double>> ps{p}, gs{g};
    opt.step(ps, gs);
    const double v1 = opt.averages()[0][0];
    const double p1 = p[0];
    g[0] = 0.0;
    opt.step(ps, gs);
    EXPECT_EQ(p[0], p1);
    EXPECT_NEAR(opt.averages()[0][0], 0.9 * v1, 1e-18);
}

TEST(RmsProp, FirstStep) {
    RmsProp<double> opt(0.001);
    std::vector<double> p{0.0}, g{1.0};
    std::vector<std::span<double>> ps{p}, gs{g};
    opt.step(ps, gs);
    EXPECT_NEAR(opt.averages()[0][0], 0.1, 1e-15);
    EXPECT_NEAR(p[0], -0.001 / (std::sqrt(0.1) + 1e-8), 1e-15);
    EXPECT_NEAR(p[0], -3.1623e-3, 1e-7);
}

TEST(RmsProp, ConstantGradientStepTendsToLearningRate) {
    RmsProp<double> opt(0.001);
    std::vector<double> p{0.0}, g{2.5};
    std::vector<std::span<double>> ps{p}, gs{g};
    double last = 0;
    for (int i = 0; i < 500; ++i) {
        const double before = p[0];
        opt.step(ps, gs);
        last = before - p[0];
    }
    EXPECT_NEAR(last, 0.001, 1e-9);
    EXPECT_GE(opt.averages()[0][0], 0.0);
}

TEST(Dropout, IdentityCases) {
    Rng rng(1);
    const std::vector<double> x{1, -2, 3};
    EXPECT_EQ(dropout<double>(x, 0.0, true, rng), x);
    EXPECT_EQ(dropout<double>(x, 0.1, false, rng), x);
}

TEST(Dropout, MonteCarloExpectation) {
    Rng rng(123);
    const std::vector<double> x{1.0, -2.0, 0.5};
    std::vector<double> mean(3, 0.0);
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) {
        const auto y = dropout<double>(x, 0.5, true, rng);
        for (std::size_t i = 0; i < 3; ++i) mean[i] += y[i] / trials;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(mean[i], x[i], 0.02 * std::abs(x[i]));
    }
}

TEST(Dropout, BackwardUsesSameMask) {
    Rng rng(8);
    const std::vector<double> x(50, 1.0);
    DropoutMask<double> mask;
    const auto y = dropout<double>(x, 0.3, true, rng, &mask);
    std::vector<double> dy(50, 1.0);
    dropout_backward<double>(mask, dy);
    EXPECT_EQ(dy, y);
}
