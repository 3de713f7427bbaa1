#pragma once

// Training hyperparameters and their flat `key = value` file format.

#include <charconv>
#include <cstdint>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sjlstm/agents.hpp"

namespace sjlstm {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class EntropyTarget : std::uint8_t { Uniform, ReadBiased95 };

struct TrainConfig {
    double learning_rate{0.0005};
    std::size_t batch_size{32};
    double dropout_embed{0.1};
    double dropout_output{0.1};
    std::size_t cell_size{128};
    std::size_t embed_dim{100};
    double clip{0.1};
    double c_skip{0.5};
    double w_rolling{0.1};
    double entropy_weight{0.1};  // delta
    double alpha{1.0};
    double beta{10.0};
    double gamma{1.0};
    ActionMode action_mode{ActionMode::Greedy};  // evaluation-time action choice
    EntropyTarget entropy_target{EntropyTarget::Uniform};
    std::size_t pretrain_epochs{5};
    std::size_t speedread_epochs{5};
    std::uint64_t seed{1};
    double warm_start_bias{4.6};
    std::string embeddings;  // optional GloVe-format file; empty = random init

    void validate() const {
        auto fail = [](const std::string& m) { throw ConfigError("invalid config: " + m); };
        if (!(learning_rate > 0)) fail("learning_rate must be positive");
        if (batch_size == 0) fail("batch_size must be positive");
        if (!(dropout_embed >= 0 && dropout_embed < 1)) fail("dropout_embed must be in [0, 1)");
        if (!(dropout_output >= 0 && dropout_output < 1)) fail("dropout_output must be in [0, 1)");
        if (cell_size == 0 || embed_dim == 0) fail("cell_size and embed_dim must be positive");
        if (!(clip > 0)) fail("clip must be positive");
        if (!(c_skip > 0 && c_skip <= 1)) fail("c_skip must be in (0, 1]");
        if (w_rolling < 0 || entropy_weight < 0 || alpha < 0 || beta < 0 || gamma < 0) {
            fail("loss weights must be nonnegative");
        }
    }

    bool operator==(const TrainConfig&) const = default;
};

namespace detail {

template <class N>
N parse_number(std::string_view key, std::string_view text) {
    N value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
    }
    return value;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
    return std::string(buf, r.ptr);
}

struct ConfigField {
    std::string_view key;
    std::function<void(TrainConfig&, std::string_view)> set;
    std::function<std::string(const TrainConfig&)> get;
};

#define SJLSTM_NUM_FIELD(name, type)                                                                         \
    ConfigField {                                                                                            \
        #name, [](TrainConfig& c, std::string_view v) { c.name = parse_number<type>(#name, v); },          \
            [](const TrainConfig& c) {                                                                       \
                if constexpr (std::is_floating_point_v<type>) return format_double(c.name);                  \
                else return std::to_string(c.name);                                                          \
            }                                                                                                \
    }

inline const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = {
        SJLSTM_NUM_FIELD(learning_rate, double),
        SJLSTM_NUM_FIELD(batch_size, std::size_t),
        SJLSTM_NUM_FIELD(dropout_embed, double),
        SJLSTM_NUM_FIELD(dropout_output, double),
        SJLSTM_NUM_FIELD(cell_size, std::size_t),
        SJLSTM_NUM_FIELD(embed_dim, std::size_t),
        SJLSTM_NUM_FIELD(clip, double),
        SJLSTM_NUM_FIELD(c_skip, double),
        SJLSTM_NUM_FIELD(w_rolling, double),
        SJLSTM_NUM_FIELD(entropy_weight, double),
        SJLSTM_NUM_FIELD(alpha, double),
        SJLSTM_NUM_FIELD(beta, double),
        SJLSTM_NUM_FIELD(gamma, double),
        ConfigField{"action_mode",
                    [](TrainConfig& c, std::string_view v) {
                        if (v == "greedy") c.action_mode = ActionMode::Greedy;
                        else if (v == "sample") c.action_mode = ActionMode::Sample;
                        else throw ConfigError("config key 'action_mode': expected greedy or sample");
                    },
                    [](const TrainConfig& c) {
                        return std::string(c.action_mode == ActionMode::Greedy ? "greedy" : "sample");
                    }},
        ConfigField{"entropy_target",
                    [](TrainConfig& c, std::string_view v) {
                        if (v == "uniform") c.entropy_target = EntropyTarget::Uniform;
                        else if (v == "read_biased_95") c.entropy_target = EntropyTarget::ReadBiased95;
                        else throw ConfigError("config key 'entropy_target': expected uniform or read_biased_95");
                    },
                    [](const TrainConfig& c) {
                        return std::string(c.entropy_target == EntropyTarget::Uniform ? "uniform"
                                                                                      : "read_biased_95");
                    }},
        SJLSTM_NUM_FIELD(pretrain_epochs, std::size_t),
        SJLSTM_NUM_FIELD(speedread_epochs, std::size_t),
        SJLSTM_NUM_FIELD(seed, std::uint64_t),
        SJLSTM_NUM_FIELD(warm_start_bias, double),
        ConfigField{"embeddings", [](TrainConfig& c, std::string_view v) { c.embeddings = std::string(v); },
                    [](const TrainConfig& c) { return c.embeddings; }},
    };
    return fields;
}

#undef SJLSTM_NUM_FIELD

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::vector<std::string_view> config_keys() {
    std::vector<std::string_view> keys;
    for (const auto& f : detail::config_fields()) {
        keys.push_back(f.key);
    }
    return keys;
}

/// Sets one field by key. Unknown keys are errors.
inline void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value) {
    for (const auto& f : detail::config_fields()) {
        if (f.key == key) {
            f.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

inline std::string get_config_value(const TrainConfig& cfg, std::string_view key) {
    for (const auto& f : detail::config_fields()) {
        if (f.key == key) {
            return f.get(cfg);
        }
    }
    throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// `key = value` lines; `#` starts a comment. Keys absent from the file keep defaults.
inline TrainConfig parse_config(std::istream& in) {
    TrainConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (auto hash = s.find('#'); hash != std::string_view::npos) {
            s = s.substr(0, hash);
        }
        s = detail::trim(s);
        if (s.empty()) {
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        try {
            set_config_value(cfg, detail::trim(s.substr(0, eq)), detail::trim(s.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

inline TrainConfig parse_config(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_config(in);
}

inline std::string to_config_text(const TrainConfig& cfg) {
    std::string out;
    for (const auto& f : detail::config_fields()) {
        out += std::string(f.key) + " = " + f.get(cfg) + "\n";
    }
    return out;
}

}  // namespace sjlstm
