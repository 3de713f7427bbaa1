#pragma once

// Analytic FLOP cost model and reading statistics.
//
// Conventions: a dense layer costs 2*in*out multiply-adds plus `out` bias adds,
// plus one op per element for a nonlinearity (ReLU, sigmoid, tanh). Softmax
// costs 3 per class. Embedding lookups are table reads and cost nothing.
// Value heads are not evaluated at inference and cost nothing.

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "sjlstm/actions.hpp"
#include "sjlstm/agents.hpp"
#include "sjlstm/reader.hpp"

namespace sjlstm {

using FlopCount = std::uint64_t;

enum class Nonlinearity : std::uint8_t { None, Elementwise };

inline FlopCount flops_dense(std::size_t in, std::size_t out, Nonlinearity nl) {
    if (in == 0 || out == 0) {
        throw std::invalid_argument("flops_dense: layer dimensions must be positive");
    }
    const FlopCount base = 2ULL * in * out + out;
    return nl == Nonlinearity::Elementwise ? base + out : base;
}

inline FlopCount flops_dense(std::size_t in, std::size_t out, Activation act) {
    return flops_dense(in, out, act == Activation::ReLU ? Nonlinearity::Elementwise : Nonlinearity::None);
}

inline FlopCount flops_softmax(std::size_t classes) { return 3ULL * classes; }

struct CostModel {
    std::size_t embed_dim{100};
    std::size_t cell_dim{128};
    std::size_t trunk_width{kAgentTrunkWidth};
    std::size_t skip_actions{kSkipActions};
    std::size_t jump_actions{kJumpActions};
    std::size_t classes{2};

    static CostModel from(const ModelDims& d) {
        return {d.embed_dim, d.cell_dim, d.trunk_width, kSkipActions, kJumpActions, d.classes};
    }
};

/// Four gate layers over concat(x, h) plus 3m for the cell update and 2m for
/// the tanh and output product.
inline FlopCount flops_lstm_step(const CostModel& m) {
    return 4 * flops_dense(m.embed_dim + m.cell_dim, m.cell_dim, Nonlinearity::Elementwise) + 5ULL * m.cell_dim;
}

inline FlopCount flops_skip_agent(const CostModel& m) {
    return flops_dense(m.embed_dim + m.cell_dim + m.skip_actions + m.jump_actions, m.trunk_width,
                       Nonlinearity::Elementwise) +
           flops_dense(m.trunk_width, m.skip_actions, Nonlinearity::None) + flops_softmax(m.skip_actions);
}

inline FlopCount flops_jump_agent(const CostModel& m) {
    return flops_dense(m.cell_dim, m.trunk_width, Nonlinearity::Elementwise) +
           flops_dense(m.trunk_width, m.jump_actions, Nonlinearity::None) + flops_softmax(m.jump_actions);
}

/// Hidden ReLU layer and output layer; the argmax needs no softmax.
inline FlopCount flops_classifier(const CostModel& m) {
    return flops_dense(m.cell_dim, m.cell_dim, Nonlinearity::Elementwise) +
           flops_dense(m.cell_dim, m.classes, Nonlinearity::None);
}

struct FlopLedger {
    FlopCount lstm_flops{0};
    FlopCount skip_agent_flops{0};
    FlopCount jump_agent_flops{0};
    FlopCount classifier_flops{0};
    FlopCount embedding_flops{0};

    FlopCount total() const {
        return lstm_flops + skip_agent_flops + jump_agent_flops + classifier_flops + embedding_flops;
    }

    FlopLedger& operator+=(const FlopLedger& o) {
        lstm_flops += o.lstm_flops;
        skip_agent_flops += o.skip_agent_flops;
        jump_agent_flops += o.jump_agent_flops;
        classifier_flops += o.classifier_flops;
        embedding_flops += o.embedding_flops;
        return *this;
    }

    bool operator==(const FlopLedger&) const = default;
};

/// Counts what actually executed: every step ran the skip agent (unless the
/// agents were overridden), read steps also ran the LSTM and the jump agent,
/// jumped-over tokens ran nothing.
template <class T>
FlopLedger episode_flops(const Trajectory<T>& traj, const CostModel& m) {
    FlopLedger ledger;
    const FlopCount lstm = flops_lstm_step(m);
    const FlopCount skip = flops_skip_agent(m);
    const FlopCount jump = flops_jump_agent(m);
    for (const auto& s : traj.steps) {
        if (traj.agents_active) {
            ledger.skip_agent_flops += skip;
        }
        if (s.skip_action == SkipAction::Read) {
            ledger.lstm_flops += lstm;
            if (traj.agents_active) {
                ledger.jump_agent_flops += jump;
            }
        }
    }
    ledger.classifier_flops = flops_classifier(m);
    return ledger;
}

/// Full-read total over speed-read total.
inline double flop_reduction(FlopCount full, FlopCount speed) {
    if (speed == 0) {
        throw std::invalid_argument("flop_reduction: speed-read total is zero");
    }
    return static_cast<double>(full) / static_cast<double>(speed);
}

inline std::string format_flop_reduction(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1fx", ratio);
    return buf;
}

struct ReadingStats {
    double jump_pct{0};
    double read_pct{0};
    double skip_pct{0};
};

inline ReadingStats reading_stats(std::size_t read, std::size_t skipped, std::size_t jumped) {
    const std::size_t total = read + skipped + jumped;
    if (total == 0) {
        throw std::invalid_argument("reading_stats: no tokens");
    }
    const double n = static_cast<double>(total);
    return {100.0 * static_cast<double>(jumped) / n, 100.0 * static_cast<double>(read) / n,
            100.0 * static_cast<double>(skipped) / n};
}

template <class T>
ReadingStats reading_stats(const Trajectory<T>& traj) {
    return reading_stats(traj.tokens_read, traj.tokens_skipped, traj.tokens_jumped);
}

/// Token counts and FLOPs accumulated over a split.
struct EvalTally {
    std::size_t examples{0};
    std::size_t correct{0};
    std::size_t read{0};
    std::size_t skipped{0};
    std::size_t jumped{0};
    FlopCount flops_full{0};
    FlopCount flops_speed{0};

    double accuracy() const { return examples == 0 ? 0.0 : static_cast<double>(correct) / examples; }
    ReadingStats stats() const { return reading_stats(read, skipped, jumped); }
    double flop_r() const { return flop_reduction(flops_full, flops_speed); }
};

/// `dataset acc jump% read% flop_full flop_speed flop_r`, tab-separated.
inline std::string format_report_row(const std::string& dataset, const EvalTally& t) {
    const auto s = t.stats();
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.4f\t%.1f\t%.1f\t%llu\t%llu\t", t.accuracy(), s.jump_pct, s.read_pct,
                  static_cast<unsigned long long>(t.flops_full), static_cast<unsigned long long>(t.flops_speed));
    return dataset + "\t" + buf + format_flop_reduction(t.flop_r());
}

}  // namespace sjlstm
