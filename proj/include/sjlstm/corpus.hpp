#pragma once

// Tokenization with punctuation-structure classification, jump tables,
// vocabularies, labeled dataset files and GloVe-style embedding files.

#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sjlstm/actions.hpp"
#include "sjlstm/rng.hpp"
#include "sjlstm/tensor.hpp"

namespace sjlstm {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using TokenId = std::uint32_t;

enum class TokenKind : std::uint8_t { Word, SubSep, SentEnd };

inline constexpr bool is_structural_char(char c) {
    return c == ',' || c == ';' || c == '.' || c == '!' || c == '?';
}

inline TokenKind classify_surface(std::string_view s) {
    if (s == "," || s == ";") {
        return TokenKind::SubSep;
    }
    if (s == "." || s == "!" || s == "?") {
        return TokenKind::SentEnd;
    }
    return TokenKind::Word;
}

struct Token {
    std::string surface;
    TokenId id{0};
    TokenKind kind{TokenKind::Word};

    bool operator==(const Token&) const = default;
};

class Vocabulary {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kUnk = 1;

    Vocabulary() : surfaces_{"<pad>", "<unk>"} {}

    TokenId add(std::string_view surface) {
        if (auto it = ids_.find(std::string(surface)); it != ids_.end()) {
            return it->second;
        }
        const auto id = static_cast<TokenId>(surfaces_.size());
        surfaces_.emplace_back(surface);
        ids_.emplace(surfaces_.back(), id);
        return id;
    }

    TokenId lookup(std::string_view surface) const {
        auto it = ids_.find(std::string(surface));
        return it == ids_.end() ? kUnk : it->second;
    }

    bool contains(std::string_view surface) const { return ids_.contains(std::string(surface)); }

    const std::string& surface(TokenId id) const { return surfaces_.at(id); }
    std::size_t size() const { return surfaces_.size(); }

    /// One surface per line, line number = id. The two reserved entries come first.
    void save(std::ostream& out) const {
        for (const auto& s : surfaces_) {
            out << s << '\n';
        }
    }

    static Vocabulary load(std::istream& in) {
        Vocabulary v;
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            if (n++ < 2) {
                continue;
            }
            v.add(line);
        }
        if (n < 2) {
            throw DataError("vocabulary file lacks the reserved entries");
        }
        return v;
    }

private:
    std::vector<std::string> surfaces_;
    std::unordered_map<std::string, TokenId> ids_;
};

/// Lowercases, splits on whitespace and detaches trailing or standalone
/// , ; . ! ? as separate tokens. Other punctuation stays attached.
inline std::vector<std::string> split_surfaces(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) {
            ++j;
        }
        if (j == i) {
            break;
        }
        std::string word(text.substr(i, j - i));
        for (auto& c : word) {
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        std::size_t stem = word.size();
        while (stem > 0 && is_structural_char(word[stem - 1])) {
            --stem;
        }
        if (stem > 0) {
            out.push_back(word.substr(0, stem));
        }
        for (std::size_t k = stem; k < word.size(); ++k) {
            out.emplace_back(1, word[k]);
        }
        i = j;
    }
    return out;
}

inline std::vector<Token> tokenize(std::string_view text, const Vocabulary& vocab) {
    std::vector<Token> tokens;
    for (auto& s : split_surfaces(text)) {
        const TokenId id = vocab.lookup(s);
        const TokenKind kind = classify_surface(s);
        tokens.push_back(Token{std::move(s), id, kind});
    }
    return tokens;
}

/// Resume positions for every (position, jump action). A target equal to
/// `terminal()` means the episode has reached the end of the text.
class JumpTable {
public:
    JumpTable() = default;
    explicit JumpTable(std::vector<std::array<std::uint32_t, kJumpActions>> targets)
        : targets_(std::move(targets)) {}

    std::size_t terminal() const { return targets_.size(); }
    std::size_t size() const { return targets_.size(); }

    std::size_t target(std::size_t position, JumpAction action) const {
        return targets_.at(position)[index_of(action)];
    }

    bool operator==(const JumpTable&) const = default;

private:
    std::vector<std::array<std::uint32_t, kJumpActions>> targets_;
};

inline JumpTable build_jump_table(std::span<const TokenKind> kinds) {
    const auto n = static_cast<std::uint32_t>(kinds.size());
    std::vector<std::array<std::uint32_t, kJumpActions>> targets(n);
    // Reverse scan: resume point after the first boundary strictly after i.
    std::uint32_t after_sub = n;
    std::uint32_t after_sent = n;
    for (std::uint32_t i = n; i-- > 0;) {
        targets[i] = {std::min(i + 1, n), after_sub, after_sent, n};
        if (kinds[i] == TokenKind::SentEnd) {
            after_sent = i + 1;
            after_sub = i + 1;
        } else if (kinds[i] == TokenKind::SubSep) {
            after_sub = i + 1;
        }
    }
    return JumpTable(std::move(targets));
}

inline JumpTable build_jump_table(std::span<const Token> tokens) {
    std::vector<TokenKind> kinds;
    kinds.reserve(tokens.size());
    for (const auto& t : tokens) {
        kinds.push_back(t.kind);
    }
    return build_jump_table(std::span<const TokenKind>(kinds));
}

struct Document {
    std::vector<Token> tokens;
    std::size_t label{0};
    JumpTable jump_table;

    std::size_t size() const { return tokens.size(); }
};

inline Document make_document(std::vector<Token> tokens, std::size_t label) {
    Document doc;
    doc.jump_table = build_jump_table(std::span<const Token>(tokens));
    doc.tokens = std::move(tokens);
    doc.label = label;
    return doc;
}

// ---------------------------------------------------------------------------
// Labeled dataset files

enum class DatasetFormat { Tsv, CsvQuoted };

struct LabeledText {
    std::string label;
    std::string text;
    std::size_t line{0};
};

namespace detail {

inline std::optional<std::string> parse_quoted_field(std::string_view line, std::size_t& pos) {
    if (pos >= line.size() || line[pos] != '"') {
        return std::nullopt;
    }
    std::string field;
    ++pos;
    while (pos < line.size()) {
        if (line[pos] == '"') {
            if (pos + 1 < line.size() && line[pos + 1] == '"') {
                field.push_back('"');
                pos += 2;
                continue;
            }
            ++pos;
            return field;
        }
        field.push_back(line[pos++]);
    }
    return std::nullopt;
}

}  // namespace detail

inline std::vector<LabeledText> read_labeled_lines(std::istream& in, DatasetFormat format) {
    std::vector<LabeledText> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (format == DatasetFormat::Tsv) {
            const auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw DataError(where + "no field separator");
            }
            rows.push_back({line.substr(0, tab), line.substr(tab + 1), lineno});
        } else {
            std::size_t pos = 0;
            auto label = detail::parse_quoted_field(line, pos);
            if (!label) {
                throw DataError(where + "malformed quoted label");
            }
            if (pos >= line.size() || line[pos] != ',') {
                throw DataError(where + "no field separator");
            }
            ++pos;
            auto text = detail::parse_quoted_field(line, pos);
            if (!text || pos != line.size()) {
                throw DataError(where + "malformed quoted text");
            }
            rows.push_back({std::move(*label), std::move(*text), lineno});
        }
    }
    return rows;
}

inline std::vector<LabeledText> read_labeled_file(const std::string& path, DatasetFormat format) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset file: " + path);
    }
    try {
        return read_labeled_lines(in, format);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

/// Class names in first-seen order; index = class id.
class LabelSet {
public:
    std::size_t add(const std::string& name) {
        if (auto it = index_.find(name); it != index_.end()) {
            return it->second;
        }
        names_.push_back(name);
        index_.emplace(name, names_.size() - 1);
        return names_.size() - 1;
    }

    std::optional<std::size_t> find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    const std::string& name(std::size_t id) const { return names_.at(id); }
    std::size_t size() const { return names_.size(); }

    void save(std::ostream& out) const {
        for (const auto& n : names_) {
            out << n << '\n';
        }
    }

    static LabelSet load(std::istream& in) {
        LabelSet s;
        std::string line;
        while (std::getline(in, line)) {
            s.add(line);
        }
        return s;
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
};

inline Vocabulary build_vocabulary(std::span<const LabeledText> rows) {
    Vocabulary v;
    for (const auto& r : rows) {
        for (const auto& s : split_surfaces(r.text)) {
            v.add(s);
        }
    }
    return v;
}

enum class LabelPolicy { Extend, Strict };

inline std::vector<Document> to_documents(std::span<const LabeledText> rows, const Vocabulary& vocab,
                                          LabelSet& labels, LabelPolicy policy) {
    std::vector<Document> docs;
    docs.reserve(rows.size());
    for (const auto& r : rows) {
        const std::string where = "line " + std::to_string(r.line) + ": ";
        std::size_t label = 0;
        if (policy == LabelPolicy::Extend) {
            label = labels.add(r.label);
        } else if (auto found = labels.find(r.label)) {
            label = *found;
        } else {
            throw DataError(where + "unknown label '" + r.label + "'");
        }
        auto tokens = tokenize(r.text, vocab);
        if (tokens.empty()) {
            throw DataError(where + "empty document");
        }
        docs.push_back(make_document(std::move(tokens), label));
    }
    return docs;
}

/// Training split: builds the vocabulary and label set from this file.
struct TrainingCorpus {
    Vocabulary vocab;
    LabelSet labels;
    std::vector<Document> documents;
};

inline TrainingCorpus load_training_split(const std::string& path, DatasetFormat format) {
    const auto rows = read_labeled_file(path, format);
    TrainingCorpus c;
    c.vocab = build_vocabulary(rows);
    try {
        c.documents = to_documents(rows, c.vocab, c.labels, LabelPolicy::Extend);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
    return c;
}

/// Evaluation split: tokenized against an existing vocabulary; unseen labels are errors.
inline std::vector<Document> load_eval_split(const std::string& path, DatasetFormat format,
                                             const Vocabulary& vocab, const LabelSet& labels) {
    const auto rows = read_labeled_file(path, format);
    LabelSet copy = labels;
    try {
        return to_documents(rows, vocab, copy, LabelPolicy::Strict);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

inline DatasetFormat format_from_path(std::string_view path) {
    return path.ends_with(".csv") ? DatasetFormat::CsvQuoted : DatasetFormat::Tsv;
}

// ---------------------------------------------------------------------------
// Embeddings

template <class T>
struct EmbeddingTable {
    Matrix<T> table;
    bool trainable{true};

    std::size_t dim() const { return table.cols; }
    std::size_t rows() const { return table.rows; }
};

template <class T>
EmbeddingTable<T> random_embeddings(std::size_t vocab_size, std::size_t d, Rng& rng) {
    EmbeddingTable<T> e{Matrix<T>(vocab_size, d), true};
    for (std::size_t r = 1; r < vocab_size; ++r) {
        for (auto& v : e.table.row(r)) {
            v = static_cast<T>(rng.uniform(-0.05, 0.05));
        }
    }
    return e;
}

/// Reads `word v1 ... vd` lines. Vocabulary words missing from the file keep
/// a uniform(-0.05, 0.05) row; the PAD row is zero.
template <class T>
EmbeddingTable<T> load_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t d, Rng& rng) {
    auto e = random_embeddings<T>(vocab.size(), d, rng);
    std::string line;
    std::size_t lineno = 0;
    std::vector<T> values;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string word;
        if (!(fields >> word)) {
            continue;
        }
        values.clear();
        double v = 0;
        while (fields >> v) {
            values.push_back(static_cast<T>(v));
        }
        if (values.size() != d) {
            throw DataError("embeddings line " + std::to_string(lineno) + ": dimension mismatch, expected " +
                            std::to_string(d) + " values, got " + std::to_string(values.size()));
        }
        if (!vocab.contains(word)) {
            continue;
        }
        const TokenId id = vocab.lookup(word);
        std::copy(values.begin(), values.end(), e.table.row(id).begin());
    }
    return e;
}

template <class T>
EmbeddingTable<T> load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t d, Rng& rng) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open embeddings file: " + path);
    }
    return load_embeddings<T>(in, vocab, d, rng);
}

}  // namespace sjlstm
