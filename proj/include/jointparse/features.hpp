#pragma once

// Feature side of the joint model: per-word vectors from a BiLSTM over
// concatenated embeddings (trainable word table, optional frozen pretrained
// table, character BiLSTM), per-tag vectors from a unidirectional LSTM that
// advances once per Tag action, and the fixed slot layouts feeding the three
// classifiers.

#include <string>
#include <vector>

#include "jointparse/lstm.hpp"
#include "jointparse/tape.hpp"
#include "jointparse/transition.hpp"
#include "jointparse/vocab.hpp"

namespace jointparse {

struct AblationConfig {
    bool tag_to_parse = true;  // tag vectors feed the structural/label classifiers
    bool parse_to_tag = true;  // stack context (S1) feeds the tag classifier
};

// All parameters of the feature encoder. Built against one ParameterStore;
// the pointers stay valid for the life of the store.
struct Encoder {
    int word_dim = 0, tag_dim = 0, char_dim = 0;
    int enc_hidden = 0, tag_hidden = 0, char_hidden = 0;
    int pretrained_dim = 0;  // 0 when no pretrained table is attached

    Parameter* word_table = nullptr;        // |V| x word_dim
    Parameter* pretrained_table = nullptr;  // |V| x pretrained_dim, usually frozen
    Parameter* tag_table = nullptr;         // |T| x tag_dim
    Parameter* char_table = nullptr;        // |C| x char_dim
    LstmCell char_fwd, char_bwd;
    LstmCell enc_fwd, enc_bwd;
    LstmCell tag_lstm;
    Parameter* word_pad = nullptr;  // stand-in for absent word slots, dim word_repr_dim
    Parameter* tag_pad = nullptr;   // stand-in for absent tag slots, dim tag_hidden
    Parameter* char_pad = nullptr;  // stand-in for empty forms, dim 2*char_hidden

    int word_repr_dim() const { return 2 * enc_hidden; }
    int embed_dim() const { return word_dim + pretrained_dim + 2 * char_hidden; }

    static Encoder create(ParameterStore& store, int n_words, int n_tags, int n_chars,
                          int word_dim, int tag_dim, int char_dim, int enc_hidden,
                          int tag_hidden, int char_hidden, int pretrained_dim) {
        Encoder e;
        e.word_dim = word_dim;
        e.tag_dim = tag_dim;
        e.char_dim = char_dim;
        e.enc_hidden = enc_hidden;
        e.tag_hidden = tag_hidden;
        e.char_hidden = char_hidden;
        e.pretrained_dim = pretrained_dim;
        e.word_table = &store.add("embed.word", n_words, word_dim);
        if (pretrained_dim > 0) {
            e.pretrained_table = &store.add("embed.pretrained", n_words, pretrained_dim);
            e.pretrained_table->trainable = false;
        }
        e.tag_table = &store.add("embed.tag", n_tags, tag_dim);
        e.char_table = &store.add("embed.char", n_chars, char_dim);
        e.char_fwd = LstmCell::create(store, "char_lstm.fwd", char_dim, char_hidden);
        e.char_bwd = LstmCell::create(store, "char_lstm.bwd", char_dim, char_hidden);
        e.enc_fwd = LstmCell::create(store, "encoder.fwd", e.embed_dim(), enc_hidden);
        e.enc_bwd = LstmCell::create(store, "encoder.bwd", e.embed_dim(), enc_hidden);
        e.tag_lstm = LstmCell::create(store, "tag_lstm", tag_dim, tag_hidden);
        e.word_pad = &store.add("pad.word", e.word_repr_dim(), 1);
        e.tag_pad = &store.add("pad.tag", tag_hidden, 1);
        e.char_pad = &store.add("pad.char", 2 * char_hidden, 1);
        return e;
    }
};

// Per-sentence training-time randomness: dropout masks on LSTM inputs plus
// the singleton-to-unknown word replacement. Inference uses the defaults.
struct EncodeOptions {
    bool train = false;
    double dropout = 0.0;
    Rng* rng = nullptr;
};

// Bidirectional character LSTM over the original (case-preserving) form;
// concatenation of the two final states. Empty forms get the learned pad.
inline Tape::NodeId char_encode(Tape& tape, const Encoder& enc, const Vocab& vocab,
                                const std::string& form) {
    const auto cps = utf8_chars(form);
    if (cps.empty()) return tape.param_vector(*enc.char_pad);
    std::vector<Tape::NodeId> embeds;
    embeds.reserve(cps.size());
    for (const auto& cp : cps) embeds.push_back(tape.lookup(*enc.char_table, vocab.char_id(cp)));
    auto fwd = lstm_chain(tape, enc.char_fwd, embeds);
    std::vector<Tape::NodeId> rev(embeds.rbegin(), embeds.rend());
    auto bwd = lstm_chain(tape, enc.char_bwd, rev);
    return tape.concat({fwd.back().h, bwd.back().h});
}

// Concatenated input vector for one word: trainable embedding (lowercased
// lookup), pretrained slice when a table is attached, character encoding.
inline Tape::NodeId embed_word(Tape& tape, const Encoder& enc, const Vocab& vocab,
                               const std::string& form, int word_id) {
    std::vector<Tape::NodeId> parts;
    parts.push_back(tape.lookup(*enc.word_table, word_id));
    if (enc.pretrained_table) parts.push_back(tape.lookup(*enc.pretrained_table, word_id));
    parts.push_back(char_encode(tape, enc, vocab, form));
    return tape.concat(parts);
}

// Forward/backward LSTM over per-position inputs; output n is the
// concatenation of the two hidden states at n.
inline std::vector<Tape::NodeId> encode_bilstm(Tape& tape, const LstmCell& fwd_cell,
                                               const LstmCell& bwd_cell,
                                               const std::vector<Tape::NodeId>& inputs) {
    auto fwd = lstm_chain(tape, fwd_cell, inputs);
    std::vector<Tape::NodeId> rev(inputs.rbegin(), inputs.rend());
    auto bwd = lstm_chain(tape, bwd_cell, rev);
    std::vector<Tape::NodeId> out(inputs.size());
    for (std::size_t n = 0; n < inputs.size(); ++n)
        out[n] = tape.concat({fwd[n].h, bwd[inputs.size() - 1 - n].h});
    return out;
}

// Word vectors x_1..x_N, computed once per sentence before any transition.
// word_ids are the resolved table rows (training may have replaced rare
// words with the unknown id).
inline std::vector<Tape::NodeId> encode_sentence(Tape& tape, const Encoder& enc,
                                                 const Vocab& vocab,
                                                 const std::vector<std::string>& forms,
                                                 const std::vector<int>& word_ids,
                                                 const EncodeOptions& opts = {}) {
    if (forms.empty()) throw NeuralError("cannot encode an empty sentence");
    std::vector<Tape::NodeId> inputs;
    inputs.reserve(forms.size());
    for (std::size_t i = 0; i < forms.size(); ++i) {
        auto x = embed_word(tape, enc, vocab, forms[i], word_ids[i]);
        if (opts.train && opts.dropout > 0)
            x = tape.mul_const(x, dropout_mask(enc.embed_dim(), opts.dropout, *opts.rng));
        inputs.push_back(x);
    }
    return encode_bilstm(tape, enc.enc_fwd, enc.enc_bwd, inputs);
}

// Unidirectional tag LSTM advanced once per Tag action, in shift order.
// t_by_position[n] is the state captured when word n+1 was tagged and never
// changes afterwards.
class TagChain {
public:
    TagChain(Tape& tape, const Encoder& enc, int n_words)
        : enc_(&enc), n_words_(n_words), state_(enc.tag_lstm.initial(tape)) {}

    void advance(Tape& tape, int tag_id, const EncodeOptions& opts = {}) {
        if (static_cast<int>(t_by_position_.size()) >= n_words_)
            throw NeuralError("tag chain advanced past the sentence length");
        auto x = tape.lookup(*enc_->tag_table, tag_id);
        if (opts.train && opts.dropout > 0)
            x = tape.mul_const(x, dropout_mask(enc_->tag_dim, opts.dropout, *opts.rng));
        state_ = enc_->tag_lstm.step(tape, state_, x);
        t_by_position_.push_back(state_.h);
    }

    int tagged() const { return static_cast<int>(t_by_position_.size()); }

    // Tag vector of word at 1-based position, or -1 if not yet tagged.
    Tape::NodeId at(int position) const {
        if (position < 1 || position > tagged()) return -1;
        return t_by_position_[position - 1];
    }

private:
    const Encoder* enc_;
    int n_words_;
    LstmCell::State state_;
    std::vector<Tape::NodeId> t_by_position_;
};

// Ordered (name, node) pairs fed to one classifier.
struct FeatureSlots {
    std::vector<std::pair<std::string, Tape::NodeId>> slots;

    std::vector<Tape::NodeId> nodes() const {
        std::vector<Tape::NodeId> out;
        out.reserve(slots.size());
        for (const auto& s : slots) out.push_back(s.second);
        return out;
    }
};

namespace detail {

struct SlotContext {
    Tape* tape;
    const Encoder* enc;
    const std::vector<Tape::NodeId>* word_reprs;  // index 0 = word 1
    const TagChain* chain;

    // word slot: x of the word at 1-based position, pad when position = 0
    Tape::NodeId word_slot(int position) const {
        if (position < 1) return tape->param_vector(*enc->word_pad);
        return (*word_reprs)[position - 1];
    }

    // tag slot: t of the word at 1-based position, pad when absent/untagged
    Tape::NodeId tag_slot(int position) const {
        const Tape::NodeId id = position < 1 ? -1 : chain->at(position);
        return id < 0 ? tape->param_vector(*enc->tag_pad) : id;
    }
};

}  // namespace detail

// Input slots of the tag classifier:
//   [x_S1; t_S1; x_B-2; t_B-2; x_S0; x_B0]
// where B-2 is the second-last word removed from the buffer, i.e. the word
// at shift-order position N - |B| - 1 (the most recently tagged one). With
// parse->tag off the stack context S1 is dropped:
//   [x_B-2; t_B-2; x_S0; x_B0]
inline FeatureSlots extract_tag_features(Tape& tape, const Encoder& enc,
                                         const Configuration& c,
                                         const std::vector<Tape::NodeId>& word_reprs,
                                         const TagChain& chain, const AblationConfig& ablation) {
    if (classifier_kind(c) != ClassifierKind::Tagging)
        throw NeuralError("extract_tag_features called on a non-tagging configuration");
    detail::SlotContext ctx{&tape, &enc, &word_reprs, &chain};
    // shift-order position of the second-last word removed from the buffer;
    // 0 when fewer than two words have been shifted
    const int b2 = c.n_words - c.buffer_size() - 1;
    FeatureSlots out;
    const int s1 = c.stack_at(1);
    const int s0 = c.stack_at(0);
    const int b0 = c.buffer_front();
    if (ablation.parse_to_tag) {
        out.slots.emplace_back("x_s1", ctx.word_slot(s1));
        out.slots.emplace_back("t_s1", ctx.tag_slot(s1));
    }
    out.slots.emplace_back("x_b2", ctx.word_slot(b2));
    out.slots.emplace_back("t_b2", ctx.tag_slot(b2));
    out.slots.emplace_back("x_s0", ctx.word_slot(s0));
    out.slots.emplace_back("x_b0", ctx.word_slot(b0));
    return out;
}

// Input slots of the shift/reduce classifier:
//   [x_S2; t_S2; x_S1; t_S1; x_S0; t_S0; x_B0]
// with tag->parse off the tag vectors are dropped:
//   [x_S2; x_S1; x_S0; x_B0]
inline FeatureSlots extract_parse_features(Tape& tape, const Encoder& enc,
                                           const Configuration& c,
                                           const std::vector<Tape::NodeId>& word_reprs,
                                           const TagChain& chain,
                                           const AblationConfig& ablation) {
    if (classifier_kind(c) != ClassifierKind::Structural)
        throw NeuralError("extract_parse_features called on a non-structural configuration");
    detail::SlotContext ctx{&tape, &enc, &word_reprs, &chain};
    FeatureSlots out;
    for (int i = 2; i >= 0; --i) {
        const int w = c.stack_at(i);
        out.slots.emplace_back("x_s" + std::to_string(i), ctx.word_slot(w));
        if (ablation.tag_to_parse)
            out.slots.emplace_back("t_s" + std::to_string(i), ctx.tag_slot(w));
    }
    out.slots.emplace_back("x_b0", ctx.word_slot(c.buffer_front()));
    return out;
}

// Input slots of the label classifier, read after the reduce so S0 is the
// surviving head:
//   [x_S1; t_S1; x_S0; t_S0]     (tag->parse off: [x_S1; x_S0])
inline FeatureSlots extract_label_features(Tape& tape, const Encoder& enc,
                                           const Configuration& c,
                                           const std::vector<Tape::NodeId>& word_reprs,
                                           const TagChain& chain,
                                           const AblationConfig& ablation) {
    if (classifier_kind(c) != ClassifierKind::Labeling)
        throw NeuralError("extract_label_features called on a non-labeling configuration");
    detail::SlotContext ctx{&tape, &enc, &word_reprs, &chain};
    FeatureSlots out;
    for (int i = 1; i >= 0; --i) {
        const int w = c.stack_at(i);
        out.slots.emplace_back("x_s" + std::to_string(i), ctx.word_slot(w));
        if (ablation.tag_to_parse)
            out.slots.emplace_back("t_s" + std::to_string(i), ctx.tag_slot(w));
    }
    return out;
}

// Classifier input widths implied by the slot layouts; used for structural
// assertions and for sizing the hidden-layer matrices.
inline int tag_input_dim(const Encoder& enc, const AblationConfig& a) {
    const int x = enc.word_repr_dim(), t = enc.tag_hidden;
    return a.parse_to_tag ? 4 * x + 2 * t : 3 * x + t;
}
inline int parse_input_dim(const Encoder& enc, const AblationConfig& a) {
    const int x = enc.word_repr_dim(), t = enc.tag_hidden;
    return a.tag_to_parse ? 4 * x + 3 * t : 4 * x;
}
inline int label_input_dim(const Encoder& enc, const AblationConfig& a) {
    const int x = enc.word_repr_dim(), t = enc.tag_hidden;
    return a.tag_to_parse ? 2 * x + 2 * t : 2 * x;
}

}  // namespace jointparse
