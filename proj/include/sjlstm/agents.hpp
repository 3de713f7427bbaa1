#pragma once

// Skip and jump agents. Each agent is a 25-unit ReLU trunk shared by a
// softmax policy head and a linear value head.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "sjlstm/actions.hpp"
#include "sjlstm/nncore.hpp"
#include "sjlstm/rng.hpp"

namespace sjlstm {

inline constexpr std::size_t kAgentTrunkWidth = 25;
inline constexpr std::size_t kPrevActionSlots = kSkipActions + kJumpActions;

template <class T>
struct AgentNet {
    Dense<T> trunk;
    Dense<T> policy;
    Dense<T> value;

    AgentNet() = default;
    AgentNet(std::size_t input_dim, std::size_t actions, std::size_t width = kAgentTrunkWidth)
        : trunk(input_dim, width, Activation::ReLU),
          policy(width, actions, Activation::Linear),
          value(width, 1, Activation::Linear) {}

    std::size_t input_dim() const { return trunk.in(); }
    std::size_t actions() const { return policy.out(); }

    bool operator==(const AgentNet&) const = default;
};

template <class T>
void glorot_init(AgentNet<T>& a, Rng& rng) {
    glorot_init(a.trunk, rng);
    glorot_init(a.policy, rng);
    glorot_init(a.value, rng);
}

/// Skip agent input is concat(x_t, o_{t-1}, onehot(skip_{t-1}), onehot(jump_{t-1})).
inline std::size_t skip_agent_input_dim(std::size_t d, std::size_t m) { return d + m + kPrevActionSlots; }

/// Previous actions; an empty optional encodes as the all-zero sentinel.
struct PrevActionEncoding {
    std::optional<SkipAction> skip;
    std::optional<JumpAction> jump;

    template <class T>
    void write(std::span<T> slots) const {
        require_size(slots.size(), kPrevActionSlots, "previous-action slots");
        std::fill(slots.begin(), slots.end(), T{0});
        if (skip) {
            slots[index_of(*skip)] = T{1};
        }
        if (jump) {
            slots[kSkipActions + index_of(*jump)] = T{1};
        }
    }

    bool operator==(const PrevActionEncoding&) const = default;
};

template <class T>
std::vector<T> skip_agent_input(std::span<const T> x, std::span<const T> o_prev, const PrevActionEncoding& prev) {
    std::vector<T> z(x.size() + o_prev.size() + kPrevActionSlots);
    auto it = std::copy(x.begin(), x.end(), z.begin());
    std::copy(o_prev.begin(), o_prev.end(), it);
    prev.write(std::span<T>(z).subspan(x.size() + o_prev.size()));
    return z;
}

template <class T>
std::vector<T> skip_trunk(const AgentNet<T>& agent, std::span<const T> x, std::span<const T> o_prev,
                          const PrevActionEncoding& prev, DenseCache<T>* cache = nullptr) {
    const auto z = skip_agent_input(x, o_prev, prev);
    return dense_forward<T>(agent.trunk, z, cache);
}

template <class T>
std::vector<T> jump_trunk(const AgentNet<T>& agent, std::span<const T> o, DenseCache<T>* cache = nullptr) {
    return dense_forward<T>(agent.trunk, o, cache);
}

/// Policy logits for a trunk state. `policy_distribution` applies the softmax.
template <class T>
std::vector<T> policy_logits(const AgentNet<T>& agent, std::span<const T> state, DenseCache<T>* cache = nullptr) {
    return dense_forward<T>(agent.policy, state, cache);
}

template <class T>
std::vector<T> policy_distribution(const AgentNet<T>& agent, std::span<const T> state) {
    const auto logits = policy_logits(agent, state);
    return softmax<T>(logits);
}

template <class T>
T state_value(const AgentNet<T>& agent, std::span<const T> state, DenseCache<T>* cache = nullptr) {
    return dense_forward<T>(agent.value, state, cache)[0];
}

enum class ActionMode : std::uint8_t { Greedy, Sample };

/// Greedy: argmax, lowest index on ties. Sample: inverse CDF over one uniform draw.
template <class T>
std::size_t select_action(std::span<const T> dist, ActionMode mode, Rng& rng) {
    if (mode == ActionMode::Greedy) {
        return argmax(dist);
    }
    const double u = rng.uniform();
    double cdf = 0.0;
    for (std::size_t k = 0; k < dist.size(); ++k) {
        cdf += static_cast<double>(dist[k]);
        if (u < cdf) {
            return k;
        }
    }
    // Rounding left u above the accumulated mass: take the last action with mass.
    for (std::size_t k = dist.size(); k-- > 0;) {
        if (dist[k] > T{0}) {
            return k;
        }
    }
    return 0;
}

/// Warm start for speed reading: zero head weights, bias `bias` on the
/// favoured action (Read / NextWord) and zero elsewhere.
template <class T>
void warm_start_policy(AgentNet<T>& agent, std::size_t favoured, T bias) {
    agent.policy.weight.fill(T{0});
    std::fill(agent.policy.bias.begin(), agent.policy.bias.end(), T{0});
    agent.policy.bias[favoured] = bias;
}

}  // namespace sjlstm
