#pragma once

// Scoring predicted against gold annotation: POS accuracy, UAS, LAS.

#include <iomanip>
#include <set>
#include <sstream>
#include <string>

#include "jointparse/conll.hpp"

namespace jointparse {

struct EvalReport {
    double pos = 0, uas = 0, las = 0;
    long scored_tokens = 0;
    long total_tokens = 0;
    long sentences = 0;
};

inline const std::set<std::string>& default_punct_tags() {
    static const std::set<std::string> tags = {"PUNCT", "SYM", ".",     ",",    ":",
                                               "``",    "''",  "-LRB-", "-RRB-"};
    return tags;
}

// POS = correct tag fraction; UAS = correct head fraction (the root word is
// scored against gold head 0); LAS additionally requires the correct label,
// with root correctness meaning correct root identification. exclude_punct
// drops tokens whose gold tag is in the punctuation set from all three
// denominators.
inline EvalReport score(const Corpus& gold, const Corpus& pred, bool exclude_punct = false,
                        const std::set<std::string>& punct_tags = default_punct_tags()) {
    if (gold.sentences.empty()) throw DataError("gold corpus is empty");
    if (gold.sentences.size() != pred.sentences.size())
        throw DataError("corpora are misaligned: gold has " +
                        std::to_string(gold.sentences.size()) + " sentences, predictions have " +
                        std::to_string(pred.sentences.size()));
    EvalReport r;
    long pos_ok = 0, uas_ok = 0, las_ok = 0;
    for (std::size_t si = 0; si < gold.sentences.size(); ++si) {
        const Sentence& g = gold.sentences[si];
        const Sentence& p = pred.sentences[si];
        if (g.size() != p.size())
            throw DataError("corpora are misaligned at sentence " + std::to_string(si + 1) +
                            ": gold has " + std::to_string(g.size()) + " tokens, predictions have " +
                            std::to_string(p.size()));
        ++r.sentences;
        for (int i = 0; i < g.size(); ++i) {
            const Token& gt = g.tokens[i];
            const Token& pt = p.tokens[i];
            if (gt.tag.empty() || gt.head < 0)
                throw DataError("gold sentence " + std::to_string(si + 1) +
                                " lacks annotation for token " + std::to_string(i + 1));
            if (pt.tag.empty() || pt.head < 0)
                throw DataError("predicted sentence " + std::to_string(si + 1) +
                                " lacks annotation for token " + std::to_string(i + 1));
            ++r.total_tokens;
            if (exclude_punct && punct_tags.count(gt.tag)) continue;
            ++r.scored_tokens;
            pos_ok += pt.tag == gt.tag;
            const bool head_ok = pt.head == gt.head;
            uas_ok += head_ok;
            las_ok += head_ok && (gt.head == 0 || pt.label == gt.label);
        }
    }
    if (r.scored_tokens == 0) throw DataError("no tokens left to score");
    r.pos = static_cast<double>(pos_ok) / static_cast<double>(r.scored_tokens);
    r.uas = static_cast<double>(uas_ok) / static_cast<double>(r.scored_tokens);
    r.las = static_cast<double>(las_ok) / static_cast<double>(r.scored_tokens);
    return r;
}

// Stable key=value line for scripting.
inline std::string machine_line(const EvalReport& r) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "pos=" << r.pos << " uas=" << r.uas << " las=" << r.las
        << " tokens=" << r.scored_tokens;
    return out.str();
}

inline std::string human_report(const EvalReport& r) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "sentences:     " << r.sentences << "\n"
        << "tokens scored: " << r.scored_tokens << " of " << r.total_tokens << "\n"
        << "POS accuracy:  " << r.pos << "\n"
        << "UAS:           " << r.uas << "\n"
        << "LAS:           " << r.las << "\n";
    return out.str();
}

}  // namespace jointparse
