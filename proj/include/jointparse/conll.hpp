#pragma once

// CoNLL-X / CoNLL-U ingestion and emission, vocabulary construction, and
// pretrained-embedding loading.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "jointparse/tape.hpp"
#include "jointparse/transition.hpp"
#include "jointparse/vocab.hpp"

namespace jointparse {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Token {
    int index = 0;              // 1-based
    std::string form;
    std::string tag;            // empty = absent; gold on input, predicted on output
    int head = -1;              // -1 = absent, 0 = root word
    std::string label;          // empty = absent
    int source_line = 0;
};

struct Sentence {
    std::vector<Token> tokens;
    int size() const { return static_cast<int>(tokens.size()); }
};

struct Corpus {
    std::vector<Sentence> sentences;
    std::string path;
    long n_tokens = 0;
    int n_with_heads = 0;        // sentences carrying a complete head column
    int n_nonprojective = 0;     // among those
};

enum class Dialect { ConllU, ConllX };

inline Dialect dialect_from_string(const std::string& s) {
    if (s == "conllu") return Dialect::ConllU;
    if (s == "conllx") return Dialect::ConllX;
    throw DataError("unknown dialect '" + s + "' (expected conllu or conllx)");
}

inline bool has_complete_heads(const Sentence& s) {
    for (const auto& t : s.tokens)
        if (t.head < 0) return false;
    return !s.tokens.empty();
}

inline bool has_complete_tags(const Sentence& s) {
    for (const auto& t : s.tokens)
        if (t.tag.empty()) return false;
    return !s.tokens.empty();
}

inline DepTree tree_of(const Sentence& s, const Vocab* vocab = nullptr) {
    DepTree t;
    t.n_words = s.size();
    for (const auto& tok : s.tokens) {
        if (tok.head > 0) {
            const int label =
                vocab && !tok.label.empty() ? vocab->labels.find(tok.label) : kUnlabeled;
            t.arcs.push_back({tok.head, tok.index, label});
        }
    }
    return t;
}

namespace detail {

inline std::vector<std::string> split_columns(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (start <= line.size()) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    // tolerate space-separated files as well
    if (cols.size() == 1) {
        cols.clear();
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) cols.push_back(tok);
    }
    return cols;
}

inline void finish_sentence(Corpus& corpus, Sentence& sent) {
    if (sent.tokens.empty()) return;
    const int n = sent.size();
    for (const auto& tok : sent.tokens) {
        if (tok.head > n)
            throw DataError(corpus.path + ":" + std::to_string(tok.source_line) +
                            ": head index " + std::to_string(tok.head) +
                            " out of range for a " + std::to_string(n) + "-token sentence");
    }
    corpus.n_tokens += n;
    if (has_complete_heads(sent)) {
        ++corpus.n_with_heads;
        try {
            if (!is_projective(tree_of(sent))) ++corpus.n_nonprojective;
        } catch (const TransitionError& e) {
            throw DataError(corpus.path + ":" + std::to_string(sent.tokens.front().source_line) +
                            ": bad dependency annotation: " + e.what());
        }
    }
    corpus.sentences.push_back(std::move(sent));
    sent = Sentence{};
}

}  // namespace detail

// Parses 10-column blocks separated by blank lines. Comment lines, multiword
// ranges (ids with '-') and empty nodes (ids with '.') are skipped. Both
// dialects read the coarse tag from column 4.
inline Corpus read_conll(std::istream& in, Dialect, const std::string& path = "<stream>") {
    Corpus corpus;
    corpus.path = path;
    Sentence sent;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            detail::finish_sentence(corpus, sent);
            continue;
        }
        if (line[0] == '#') continue;
        auto cols = detail::split_columns(line);
        if (cols.size() < 8)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected at least 8 columns, got " +
                            std::to_string(cols.size()));
        const std::string& id = cols[0];
        if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) continue;

        Token tok;
        tok.source_line = line_no;
        try {
            tok.index = std::stoi(id);
        } catch (...) {
            throw DataError(path + ":" + std::to_string(line_no) + ": bad token id '" + id + "'");
        }
        if (tok.index != sent.size() + 1)
            throw DataError(path + ":" + std::to_string(line_no) + ": token id " + id +
                            " is not consecutive");
        tok.form = cols[1];
        if (tok.form.empty())
            throw DataError(path + ":" + std::to_string(line_no) + ": empty form");
        if (cols[3] != "_") tok.tag = cols[3];
        if (cols[6] != "_") {
            try {
                tok.head = std::stoi(cols[6]);
            } catch (...) {
                throw DataError(path + ":" + std::to_string(line_no) + ": bad head '" + cols[6] + "'");
            }
            if (tok.head < 0)
                throw DataError(path + ":" + std::to_string(line_no) + ": negative head");
        }
        if (cols[7] != "_") tok.label = cols[7];
        sent.tokens.push_back(std::move(tok));
    }
    detail::finish_sentence(corpus, sent);
    return corpus;
}

inline Corpus read_conll_file(const std::string& path, Dialect d) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_conll(in, d, path);
}

// Emits annotated sentences; every token must carry a tag, a head, and a
// label (the root word's label is whatever the caller stored, typically the
// configured root label).
inline void write_conll(std::ostream& out, const Corpus& corpus, Dialect dialect) {
    for (const auto& sent : corpus.sentences) {
        for (const auto& tok : sent.tokens) {
            if (tok.tag.empty() || tok.head < 0 || tok.label.empty())
                throw DataError("refusing to emit incomplete annotation for token '" + tok.form +
                                "' (index " + std::to_string(tok.index) + ")");
            out << tok.index << '\t' << tok.form << '\t' << '_' << '\t' << tok.tag << '\t'
                << (dialect == Dialect::ConllX ? tok.tag : "_") << '\t' << '_' << '\t'
                << tok.head << '\t' << tok.label << '\t' << '_' << '\t' << '_' << '\n';
        }
        out << '\n';
    }
}

// Word/tag/label/character inventories from gold columns. All words are
// counted; lookups below min_word_count resolve to the unknown id while the
// stored frequency keeps singleton statistics available to training.
inline Vocab build_vocab(const Corpus& corpus, int min_word_count = 1) {
    if (corpus.sentences.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
    Vocab v;
    v.min_word_count = min_word_count;
    for (const auto& sent : corpus.sentences) {
        for (const auto& tok : sent.tokens) {
            const int wid = v.words.add(lowercased(tok.form));
            if (wid == static_cast<int>(v.word_freq.size())) v.word_freq.push_back(0);
            ++v.word_freq[wid];
            for (const auto& cp : utf8_chars(tok.form)) v.chars.add(cp);
            if (!tok.tag.empty()) v.tags.add(tok.tag);
            if (!tok.label.empty() && tok.head > 0) v.labels.add(tok.label);
        }
    }
    return v;
}

// Numerized gold view of a sentence for the transition machinery.
inline GoldParse numerize(const Sentence& sent, const Vocab& vocab) {
    GoldParse g;
    const int n = sent.size();
    g.tags.resize(n, -1);
    g.heads.resize(n, -1);
    g.labels.resize(n, -1);
    for (int i = 0; i < n; ++i) {
        const Token& tok = sent.tokens[i];
        if (!tok.tag.empty()) g.tags[i] = vocab.tags.find(tok.tag);
        g.heads[i] = tok.head;
        if (!tok.label.empty() && tok.head > 0) g.labels[i] = vocab.labels.find(tok.label);
    }
    return g;
}

struct PretrainedTable {
    Mat table;  // |words| x dim, zero rows for uncovered words
    int dim = 0;
    long covered = 0;
};

// Plain-text embeddings: token then whitespace-separated floats, one entry
// per line; an optional "count dim" header is auto-detected. Only rows for
// in-vocabulary words are kept.
inline PretrainedTable load_pretrained(std::istream& in, const Vocab& vocab,
                                       const std::string& path = "<stream>") {
    PretrainedTable out;
    std::string line;
    int line_no = 0;
    bool first_data_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<std::string> fields;
        std::string f;
        while (ss >> f) fields.push_back(f);
        if (!first_data_seen && fields.size() == 2) {
            // header "count dim"
            try {
                (void)std::stol(fields[0]);
                out.dim = std::stoi(fields[1]);
                first_data_seen = true;
                continue;
            } catch (...) {
                // fall through: a 1-dim embedding row
            }
        }
        if (fields.size() < 2)
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed embedding row");
        const int row_dim = static_cast<int>(fields.size()) - 1;
        if (out.dim == 0) out.dim = row_dim;
        if (row_dim != out.dim)
            throw DataError(path + ":" + std::to_string(line_no) + ": row has dimension " +
                            std::to_string(row_dim) + ", expected " + std::to_string(out.dim));
        if (out.table.size() == 0) out.table = Mat::Zero(vocab.words.size(), out.dim);
        first_data_seen = true;
        const int wid = vocab.words.find(lowercased(fields[0]));
        if (wid < 0) continue;
        for (int j = 0; j < out.dim; ++j) {
            try {
                out.table(wid, j) = std::stod(fields[j + 1]);
            } catch (...) {
                throw DataError(path + ":" + std::to_string(line_no) + ": bad float '" +
                                fields[j + 1] + "'");
            }
        }
        ++out.covered;
    }
    if (out.dim == 0) throw DataError(path + ": no embedding rows found");
    if (out.table.size() == 0) out.table = Mat::Zero(vocab.words.size(), out.dim);
    return out;
}

inline PretrainedTable load_pretrained_file(const std::string& path, const Vocab& vocab) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    auto t = load_pretrained(in, vocab, path);
    std::cerr << "loaded pretrained embeddings from " << path << ": dim " << t.dim << ", "
              << t.covered << "/" << vocab.words.size() << " vocabulary words covered\n";
    return t;
}

}  // namespace jointparse
