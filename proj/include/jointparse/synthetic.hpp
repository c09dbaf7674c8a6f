#pragma once

// Synthetic gold corpora for self-contained checks: random projective trees
// obtained by replaying uniformly random legal action sequences.

#include <string>

#include "jointparse/conll.hpp"
#include "jointparse/rng.hpp"
#include "jointparse/transition.hpp"

namespace jointparse {

// Sentences of length [min_len, max_len] with forms w0..w{vocab-1}, tags
// t0.., labels l0.., and uniformly sampled projective gold derivations.
inline Corpus synthetic_corpus(int n_sentences, int vocab_words, int n_tags, int n_labels,
                               int min_len, int max_len, std::uint64_t seed) {
    Rng rng(seed);
    Corpus corpus;
    corpus.path = "<synthetic>";
    for (int s = 0; s < n_sentences; ++s) {
        const int n = min_len + static_cast<int>(rng.below(max_len - min_len + 1));
        Configuration c(n);
        std::vector<Action> actions;
        while (!is_terminal(c)) {
            auto acts = legal_actions(c, n_tags, n_labels);
            actions.push_back(acts[rng.below(acts.size())]);
            c = apply_action(c, actions.back());
        }
        const ReplayResult r = replay(actions, n);

        std::vector<int> heads(n, 0), labels(n, -1);
        for (const auto& arc : r.tree.arcs) {
            heads[arc.modifier - 1] = arc.head;
            labels[arc.modifier - 1] = arc.label;
        }
        Sentence sent;
        for (int i = 0; i < n; ++i) {
            Token tok;
            tok.index = i + 1;
            tok.form = "w" + std::to_string(rng.below(vocab_words));
            tok.tag = "t" + std::to_string(r.tags[i]);
            tok.head = heads[i];
            tok.label = heads[i] == 0 ? "root" : "l" + std::to_string(labels[i]);
            sent.tokens.push_back(std::move(tok));
        }
        corpus.n_tokens += n;
        ++corpus.n_with_heads;
        corpus.sentences.push_back(std::move(sent));
    }
    return corpus;
}

}  // namespace jointparse
