// sjlstm: train, evaluate and trace the skip/jump speed-reading LSTM.
//
// Exit codes: 0 success, 1 internal error, 2 usage or input error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sjlstm/sjlstm.hpp"

#ifndef SJLSTM_GIT_DESCRIBE
#define SJLSTM_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using namespace sjlstm;
using Scalar = float;

namespace {

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void require_file(const fs::path& p) {
    if (!fs::is_regular_file(p)) {
        throw InputError("no such file: " + p.string());
    }
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) {
        throw InputError("cannot write " + p.string());
    }
    return out;
}

/// train/valid/test split file in a data directory, .tsv preferred over .csv.
std::optional<fs::path> split_file(const fs::path& dir, const std::string& split) {
    for (const char* ext : {".tsv", ".csv"}) {
        auto p = dir / (split + ext);
        if (fs::is_regular_file(p)) {
            return p;
        }
    }
    return std::nullopt;
}

fs::path require_split(const fs::path& dir, const std::string& split) {
    if (!fs::is_directory(dir)) {
        throw InputError("no such data directory: " + dir.string());
    }
    auto p = split_file(dir, split);
    if (!p) {
        throw InputError("missing dataset file: " + (dir / (split + ".tsv")).string());
    }
    return *p;
}

struct ModelBundle {
    ModelParams<Scalar> params;
    Vocabulary vocab;
    LabelSet labels;
};

ModelBundle load_bundle(const fs::path& checkpoint) {
    require_file(checkpoint);
    const auto dir = checkpoint.parent_path();
    const auto vocab_path = dir / "vocab.txt";
    const auto labels_path = dir / "labels.txt";
    require_file(vocab_path);
    require_file(labels_path);
    ModelBundle b;
    b.params = load_checkpoint<Scalar>(checkpoint.string());
    std::ifstream v(vocab_path);
    b.vocab = Vocabulary::load(v);
    std::ifstream l(labels_path);
    b.labels = LabelSet::load(l);
    if (b.vocab.size() != b.params.embedding.rows() || b.labels.size() != b.params.classes()) {
        throw InputError("vocab.txt/labels.txt do not match the checkpoint shapes");
    }
    return b;
}

void save_bundle(const fs::path& out_dir, const std::string& name, const ModelBundle& b) {
    save_checkpoint(b.params, (out_dir / name).string());
    auto v = open_out(out_dir / "vocab.txt");
    b.vocab.save(v);
    auto l = open_out(out_dir / "labels.txt");
    b.labels.save(l);
}

TrainConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides) {
    require_file(path);
    std::ifstream in(path);
    TrainConfig cfg = parse_config(in);
    for (const auto& [k, v] : overrides) {
        set_config_value(cfg, k, v);
    }
    cfg.validate();
    return cfg;
}

void write_manifest(const fs::path& out_dir, const std::string& command, const TrainConfig& cfg,
                    const std::string& data_dir, const std::string& checkpoint_in, const std::string& checkpoint_out) {
    nlohmann::ordered_json j;
    j["command"] = command;
    nlohmann::ordered_json c;
    for (auto key : config_keys()) {
        c[std::string(key)] = get_config_value(cfg, key);
    }
    j["config"] = c;
    j["seed"] = cfg.seed;
    j["data_dir"] = data_dir;
    if (!checkpoint_in.empty()) {
        j["input_checkpoint"] = checkpoint_in;
    }
    j["checkpoint"] = checkpoint_out;
    j["git_describe"] = SJLSTM_GIT_DESCRIBE;
    j["started_at"] = utc_now();
    auto out = open_out(out_dir / "manifest.json");
    out << j.dump(2) << '\n';
}

std::string data_dir_from_manifest(const fs::path& checkpoint) {
    const auto p = checkpoint.parent_path() / "manifest.json";
    if (!fs::is_regular_file(p)) {
        return {};
    }
    std::ifstream in(p);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("data_dir")) {
        return {};
    }
    return j["data_dir"].get<std::string>();
}

void add_config_overrides(CLI::App* cmd, std::map<std::string, std::string>& overrides) {
    for (auto key : config_keys()) {
        const std::string k(key);
        cmd->add_option_function<std::string>(
            "--" + k, [&overrides, k](const std::string& v) { overrides[k] = v; }, "override config key " + k);
    }
}

struct Splits {
    TrainingCorpus corpus;
    std::vector<Document> valid;
};

Splits load_splits(const fs::path& data_dir) {
    const auto train_path = require_split(data_dir, "train");
    Splits s;
    s.corpus = load_training_split(train_path.string(), format_from_path(train_path.string()));
    if (auto valid_path = split_file(data_dir, "valid")) {
        s.valid = load_eval_split(valid_path->string(), format_from_path(valid_path->string()), s.corpus.vocab,
                                  s.corpus.labels);
    }
    return s;
}

// ---------------------------------------------------------------------------

int cmd_pretrain(const std::string& config_path, const std::map<std::string, std::string>& overrides,
                 const fs::path& data_dir, const fs::path& out_dir) {
    const auto cfg = load_config(config_path, overrides);
    auto splits = load_splits(data_dir);
    fs::create_directories(out_dir);
    write_manifest(out_dir, "pretrain", cfg, data_dir.string(), "", (out_dir / "model.ckpt").string());
    {
        auto c = open_out(out_dir / "config.txt");
        c << to_config_text(cfg);
    }

    Rng rng(derive_seed(cfg.seed, 0x1417));
    ModelDims dims{splits.corpus.vocab.size(), cfg.embed_dim, cfg.cell_size, splits.corpus.labels.size()};
    auto params = init_model<Scalar>(dims, rng);
    if (!cfg.embeddings.empty()) {
        require_file(cfg.embeddings);
        params.embedding = load_embeddings<Scalar>(cfg.embeddings, splits.corpus.vocab, cfg.embed_dim, rng);
    }

    auto log = open_out(out_dir / "train_log.tsv");
    auto result = pretrain(params, std::span<const Document>(splits.corpus.documents),
                           std::span<const Document>(splits.valid), cfg,
                           [&](const std::string& line) { log << line << '\n'; });
    auto acc_log = open_out(out_dir / "valid_accuracy.tsv");
    for (std::size_t e = 0; e < result.valid_accuracy.size(); ++e) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%zu\t%.4f", e + 1, result.valid_accuracy[e]);
        acc_log << buf << '\n';
        std::cout << "epoch " << e + 1 << " valid_acc " << result.valid_accuracy[e] << '\n';
    }
    save_bundle(out_dir, "model.ckpt", {std::move(result.params), splits.corpus.vocab, splits.corpus.labels});
    std::cout << "best epoch " << result.best_epoch << ", checkpoint " << (out_dir / "model.ckpt").string() << '\n';
    return 0;
}

int cmd_speedread(const std::string& config_path, const std::map<std::string, std::string>& overrides,
                  const fs::path& checkpoint, std::string data_dir, const fs::path& out_dir) {
    const auto cfg = load_config(config_path, overrides);
    auto bundle = load_bundle(checkpoint);
    if (data_dir.empty()) {
        data_dir = data_dir_from_manifest(checkpoint);
    }
    if (data_dir.empty()) {
        throw InputError("no --data given and no manifest.json next to the checkpoint names one");
    }
    const auto train_path = require_split(data_dir, "train");
    auto train = load_eval_split(train_path.string(), format_from_path(train_path.string()), bundle.vocab,
                                 bundle.labels);
    std::vector<Document> valid;
    if (auto valid_path = split_file(data_dir, "valid")) {
        valid = load_eval_split(valid_path->string(), format_from_path(valid_path->string()), bundle.vocab,
                                bundle.labels);
    }
    fs::create_directories(out_dir);
    write_manifest(out_dir, "speedread", cfg, data_dir, checkpoint.string(), (out_dir / "model.ckpt").string());
    {
        auto c = open_out(out_dir / "config.txt");
        c << to_config_text(cfg);
    }
    auto log = open_out(out_dir / "train_log.tsv");
    auto result = speedread_train(bundle.params, std::span<const Document>(train), std::span<const Document>(valid),
                                  cfg, [&](const std::string& line) { log << line << '\n'; });
    auto epochs = open_out(out_dir / "epochs.tsv");
    for (const auto& e : result.epochs) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu\t%.4f\t%.1f\t%.1f\t%.4f\t%.1f\t%.1f", e.epoch, e.train_accuracy,
                      e.train_read_pct, e.train_jump_pct, e.valid_accuracy, e.valid_read_pct, e.valid_jump_pct);
        epochs << buf << '\n';
        std::cout << "epoch " << e.epoch << " valid_acc " << e.valid_accuracy << " read% " << e.valid_read_pct
                  << " jump% " << e.valid_jump_pct << '\n';
    }
    bundle.params = std::move(result.params);
    save_bundle(out_dir, "model.ckpt", bundle);
    std::cout << "checkpoint " << (out_dir / "model.ckpt").string() << '\n';
    return 0;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& split, const std::string& mode, bool force_read,
             std::string name, const std::string& predictions_path, std::uint64_t seed) {
    auto bundle = load_bundle(checkpoint);
    require_file(split);
    const auto docs = load_eval_split(split.string(), format_from_path(split.string()), bundle.vocab, bundle.labels);
    const ActionMode am = mode == "sample" ? ActionMode::Sample : ActionMode::Greedy;
    const auto ev = evaluate(bundle.params, std::span<const Document>(docs), am,
                             force_read ? AgentOverride::ForceRead : AgentOverride::None, seed);
    if (!predictions_path.empty()) {
        auto out = open_out(predictions_path);
        for (std::size_t i = 0; i < docs.size(); ++i) {
            out << i << '\t' << bundle.labels.name(ev.predictions[i]) << '\t' << bundle.labels.name(docs[i].label)
                << '\n';
        }
    }
    if (name.empty()) {
        name = split.stem().string();
    }
    std::cout << format_report_row(name, ev.tally) << '\n';
    return 0;
}

int cmd_trace(const fs::path& checkpoint, const fs::path& input, bool force_read) {
    auto bundle = load_bundle(checkpoint);
    require_file(input);
    std::ifstream in(input);
    std::string line;
    while (std::getline(in, line)) {
        auto tokens = tokenize(line, bundle.vocab);
        if (tokens.empty()) {
            std::cout << '\n';
            continue;
        }
        const auto doc = make_document(std::move(tokens), 0);
        std::cout << trace(bundle.params, doc, force_read ? AgentOverride::ForceRead : AgentOverride::None) << '\n';
    }
    return 0;
}

int cmd_synth(const fs::path& out_dir, std::size_t train, std::size_t valid, std::size_t test, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.documents = train + valid + test;
    spec.seed = seed;
    const auto rows = generate_keyword_corpus(spec);
    fs::create_directories(out_dir);
    auto write = [&](const std::string& file, std::size_t begin, std::size_t end) {
        auto out = open_out(out_dir / file);
        for (std::size_t i = begin; i < end; ++i) {
            out << rows[i].label << '\t' << rows[i].text << '\n';
        }
    };
    write("train.tsv", 0, train);
    write("valid.tsv", train, train + valid);
    write("test.tsv", train + valid, train + valid + test);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skip/jump speed-reading LSTM: training, evaluation and traces"};
    app.require_subcommand(1);

    std::string config_path, checkpoint, data_dir, out_dir, split, input, mode = "greedy", name, predictions;
    bool force_read = false;
    std::uint64_t seed = 1;
    std::map<std::string, std::string> overrides;

    auto* pre = app.add_subcommand("pretrain", "full-read supervised training");
    pre->add_option("--config", config_path, "config file (key = value)")->required();
    pre->add_option("--data", data_dir, "directory with train.tsv and valid.tsv")->required();
    pre->add_option("--out", out_dir, "output directory")->required();
    add_config_overrides(pre, overrides);

    auto* sr = app.add_subcommand("speedread", "actor-critic speed-read training from a pretrained checkpoint");
    sr->add_option("--config", config_path, "config file (key = value)")->required();
    sr->add_option("--checkpoint", checkpoint, "pretrained checkpoint")->required();
    sr->add_option("--data", data_dir, "data directory (default: from the checkpoint's manifest)");
    sr->add_option("--out", out_dir, "output directory")->required();
    add_config_overrides(sr, overrides);

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint and print one report row");
    ev->add_option("--checkpoint", checkpoint, "checkpoint")->required();
    ev->add_option("--split", split, "labeled dataset file")->required();
    ev->add_option("--mode", mode, "greedy or sample")->check(CLI::IsMember({"greedy", "sample"}));
    ev->add_flag("--force-read", force_read, "bypass the agents and read every token");
    ev->add_option("--name", name, "dataset name for the report row");
    ev->add_option("--predictions", predictions, "write per-example predictions here");
    ev->add_option("--seed", seed, "seed for sampled actions");

    auto* tr = app.add_subcommand("trace", "annotate texts with skip (~w~) and jump ([[ ]]) markers");
    tr->add_option("--checkpoint", checkpoint, "checkpoint")->required();
    tr->add_option("--input", input, "text file, one document per line")->required();
    tr->add_flag("--force-read", force_read, "bypass the agents and read every token");

    std::size_t n_train = 5000, n_valid = 1000, n_test = 1000;
    auto* syn = app.add_subcommand("synth", "write the keyword-in-first-sentence synthetic dataset");
    syn->add_option("--out", out_dir, "output directory")->required();
    syn->add_option("--train", n_train);
    syn->add_option("--valid", n_valid);
    syn->add_option("--test", n_test);
    syn->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*pre) return cmd_pretrain(config_path, overrides, data_dir, out_dir);
        if (*sr) return cmd_speedread(config_path, overrides, checkpoint, data_dir, out_dir);
        if (*ev) return cmd_eval(checkpoint, split, mode, force_read, name, predictions, seed);
        if (*tr) return cmd_trace(checkpoint, input, force_read);
        if (*syn) return cmd_synth(out_dir, n_train, n_valid, n_test, seed);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const CheckpointError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
