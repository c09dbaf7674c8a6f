#pragma once

// The joint model: encoder + three classifiers wired into one parameter
// store, teacher-forced training with Adam, greedy decoding, and the
// versioned binary checkpoint format.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "jointparse/conll.hpp"
#include "jointparse/features.hpp"
#include "jointparse/transition.hpp"

namespace jointparse {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CorruptModelError : ModelError {
    using ModelError::ModelError;
};
struct ModelVersionError : ModelError {
    using ModelError::ModelError;
};

struct Hyperparams {
    int word_dim = 150;
    int tag_dim = 50;
    int char_dim = 50;
    int enc_hidden = 200;   // per direction; word vectors are twice this
    int tag_hidden = 100;
    int char_hidden = 50;   // per direction
    int classifier_hidden = 300;
    double learning_rate = 1e-3;
    int epochs = 30;
    double clip_norm = 5.0;
    double l2_lambda = 1e-8;
    double dropout = 0.25;
    double beta1 = 0.9;
    double beta2 = 0.9;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 1;
    bool relu_hidden = true;        // identity hidden layers when false
    double singleton_unk_prob = 0.25;
    bool l2_on_embeddings = true;
    int min_word_count = 1;
    bool finetune_pretrained = false;

    void validate() const {
        if (word_dim <= 0 || tag_dim <= 0 || char_dim <= 0 || enc_hidden <= 0 ||
            tag_hidden <= 0 || char_hidden <= 0 || classifier_hidden <= 0)
            throw ModelError("all dimensions must be positive");
        if (dropout < 0 || dropout >= 1) throw ModelError("dropout must be in [0, 1)");
        if (learning_rate <= 0) throw ModelError("learning rate must be positive");
        if (clip_norm <= 0) throw ModelError("clip norm must be positive");
        if (epochs < 0) throw ModelError("epochs must be non-negative");
    }
};

struct DecodeOutput {
    std::vector<int> tags;   // tag ids, one per word
    DepTree tree;            // N-1 labeled arcs
    std::vector<Action> actions;
    double log_prob = 0;
};

// Per-sentence search state: configuration, cached word vectors, and the
// incrementally extended tag chain.
struct DecodeState {
    Configuration config;
    std::unique_ptr<Tape> tape;
    std::vector<Tape::NodeId> word_reprs;
    std::optional<TagChain> chain;
    double log_prob = 0;

    DecodeState() : config(1) {}
};

struct EpochMetrics {
    int epoch = 0;
    double avg_loss = 0;
    bool has_dev = false;
    double dev_pos = 0, dev_uas = 0, dev_las = 0;
};

// One teacher-forced step, for inspection and invariant checks.
struct StepProbe {
    ClassifierKind kind = ClassifierKind::Structural;
    Vec probs;
    int gold_class = -1;
    Action gold_action;
};

class JointModel {
public:
    JointModel(Vocab vocab, Hyperparams hp, AblationConfig ablation, int pretrained_dim = 0)
        : vocab_(std::move(vocab)), hp_(hp), ablation_(ablation) {
        hp_.validate();
        if (vocab_.tags.size() < 1) throw ModelError("tag inventory is empty");
        if (vocab_.labels.size() < 1)
            throw ModelError("label inventory is empty (the training corpus has no arcs)");
        vocab_.min_word_count = hp_.min_word_count;
        enc_ = Encoder::create(store_, vocab_.words.size(), vocab_.tags.size(),
                               vocab_.chars.size(), hp_.word_dim, hp_.tag_dim, hp_.char_dim,
                               hp_.enc_hidden, hp_.tag_hidden, hp_.char_hidden, pretrained_dim);
        build_classifier(tag_, "classifier.tag", tag_input_dim(enc_, ablation_),
                         vocab_.tags.size());
        build_classifier(parse_, "classifier.parse", parse_input_dim(enc_, ablation_), 3);
        build_classifier(label_, "classifier.label", label_input_dim(enc_, ablation_),
                         vocab_.labels.size());
        if (!hp_.l2_on_embeddings) {
            enc_.word_table->l2_exempt = true;
            enc_.tag_table->l2_exempt = true;
            enc_.char_table->l2_exempt = true;
        }
        init_params();
    }

    const Vocab& vocab() const { return vocab_; }
    const Hyperparams& hyperparams() const { return hp_; }
    const AblationConfig& ablation() const { return ablation_; }
    ParameterStore& params() { return store_; }
    const Encoder& encoder() const { return enc_; }

    int n_tags() const { return vocab_.tags.size(); }
    int n_labels() const { return vocab_.labels.size(); }
    int tag_classifier_input_dim() const { return tag_input_dim(enc_, ablation_); }
    int parse_classifier_input_dim() const { return parse_input_dim(enc_, ablation_); }
    int label_classifier_input_dim() const { return label_input_dim(enc_, ablation_); }

    // Copies a loaded pretrained table into the frozen embedding slice.
    void attach_pretrained(const PretrainedTable& table) {
        if (!enc_.pretrained_table)
            throw ModelError("model was built without a pretrained slice");
        if (table.dim != enc_.pretrained_dim ||
            table.table.rows() != enc_.pretrained_table->rows())
            throw ModelError("pretrained table shape does not match the model");
        enc_.pretrained_table->value = table.table;
        enc_.pretrained_table->trainable = hp_.finetune_pretrained;
    }

    // ------------------------------------------------------------------
    // Scoring and decoding

    // Negative log-likelihood of the gold derivation (Shift/Tag/Left/Right/
    // Label cross-entropies summed over all 4N-2 steps, probabilities over
    // the full class sets).
    double sentence_nll(const Sentence& sent) {
        return teacher_forced(sent, /*train=*/false, nullptr, /*backward=*/false, nullptr);
    }

    // Same forward pass plus gradient accumulation; returns the loss.
    double backward_nll(const Sentence& sent, bool train_mode = false, Rng* rng = nullptr) {
        return teacher_forced(sent, train_mode, rng, /*backward=*/true, nullptr);
    }

    // Per-step gold probabilities in teacher-forced inference mode.
    std::vector<StepProbe> forced_steps(const Sentence& sent) {
        std::vector<StepProbe> probes;
        teacher_forced(sent, false, nullptr, false, &probes);
        return probes;
    }

    DecodeState begin_decode(const Sentence& sent) {
        const int n = sent.size();
        if (n < 1) throw ModelError("cannot decode an empty sentence");
        DecodeState state;
        state.config = Configuration(n);
        state.tape = std::make_unique<Tape>();
        std::vector<std::string> forms;
        std::vector<int> ids;
        for (const auto& tok : sent.tokens) {
            forms.push_back(tok.form);
            ids.push_back(vocab_.word_id(tok.form));
        }
        state.word_reprs = encode_sentence(*state.tape, enc_, vocab_, forms, ids);
        state.chain.emplace(*state.tape, enc_, n);
        return state;
    }

    // Probability vector of the active classifier, over its full class set.
    Vec action_distribution(DecodeState& state) {
        const ClassifierKind kind = classifier_kind(state.config);
        const auto logits =
            step_logits(*state.tape, state.config, state.word_reprs, *state.chain, kind, {});
        return softmax(state.tape->value(logits));
    }

    // Distribution with structurally impossible actions zeroed out and the
    // rest renormalized; identical to action_distribution for the tag and
    // label classifiers, whose classes are always applicable.
    Vec masked_action_distribution(DecodeState& state) {
        Vec p = action_distribution(state);
        if (classifier_kind(state.config) != ClassifierKind::Structural) return p;
        for (int k = 0; k < 3; ++k)
            if (!is_legal(state.config, action_from(ClassifierKind::Structural, k))) p[k] = 0;
        const double total = p.sum();
        if (total > 0) p /= total;
        return p;
    }

    void advance(DecodeState& state, const Action& a) {
        state.config = apply_action(state.config, a);
        if (a.type == ActionType::Tag) state.chain->advance(*state.tape, a.arg);
    }

    // Greedy argmax decoding; ties break toward the lowest class index. The
    // output is always a complete tag sequence plus a fully labeled
    // projective tree, reached in exactly 4N-2 steps.
    DecodeOutput greedy_decode(const Sentence& sent) {
        DecodeState state = begin_decode(sent);
        DecodeOutput out;
        while (!is_terminal(state.config)) {
            const ClassifierKind kind = classifier_kind(state.config);
            const Vec p = action_distribution(state);
            int best = -1;
            for (int k = 0; k < p.size(); ++k) {
                if (kind == ClassifierKind::Structural &&
                    !is_legal(state.config, action_from(kind, k)))
                    continue;
                if (best < 0 || p[k] > p[best]) best = k;
            }
            const Action a = action_from(kind, best);
            state.log_prob += std::log(std::max(p[best], 1e-300));
            advance(state, a);
            out.actions.push_back(a);
        }
        out.tags = state.config.tags;
        out.tree.n_words = state.config.n_words;
        out.tree.arcs = state.config.arcs;
        out.log_prob = state.log_prob;
        return out;
    }

    // ------------------------------------------------------------------
    // Training

    // Per-epoch loop: shuffled sentences, per-sentence backward, global-norm
    // clipping, Adam. Keeps the best-dev-LAS parameters when a dev corpus is
    // given. Training sentences must carry complete, projective gold.
    std::vector<EpochMetrics> train(const Corpus& train_corpus, const Corpus* dev_corpus,
                                    std::ostream* log = &std::cerr) {
        if (train_corpus.sentences.empty()) throw DataError("training corpus is empty");
        Rng rng(hp_.seed);
        std::vector<std::size_t> order(train_corpus.sentences.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        std::vector<EpochMetrics> history;
        double best_las = -1;
        std::vector<Mat> best_values;
        for (int epoch = 1; epoch <= hp_.epochs; ++epoch) {
            rng.shuffle(order);
            double loss_sum = 0;
            for (std::size_t idx : order) {
                const Sentence& sent = train_corpus.sentences[idx];
                store_.zero_grads();
                loss_sum += backward_nll(sent, /*train_mode=*/true, &rng);
                clip_global_norm(store_, hp_.clip_norm);
                adam_step(store_, hp_.learning_rate, hp_.beta1, hp_.beta2, hp_.adam_epsilon,
                          hp_.l2_lambda);
            }
            EpochMetrics m;
            m.epoch = epoch;
            m.avg_loss = loss_sum / static_cast<double>(order.size());
            if (dev_corpus && !dev_corpus->sentences.empty()) {
                m.has_dev = true;
                evaluate_on(*dev_corpus, m.dev_pos, m.dev_uas, m.dev_las);
                if (m.dev_las > best_las) {
                    best_las = m.dev_las;
                    best_values.clear();
                    for (std::size_t i = 0; i < store_.size(); ++i)
                        best_values.push_back(store_[i].value);
                }
            }
            history.push_back(m);
            if (log) {
                *log << "epoch " << epoch << " loss " << m.avg_loss;
                if (m.has_dev)
                    *log << " dev_pos " << m.dev_pos << " dev_uas " << m.dev_uas << " dev_las "
                         << m.dev_las;
                *log << "\n";
            }
        }
        if (!best_values.empty()) {
            for (std::size_t i = 0; i < store_.size(); ++i) store_[i].value = best_values[i];
        }
        return history;
    }

    // ------------------------------------------------------------------
    // Serialization

    static constexpr char kMagic[17] = "jointparse.model";  // 16 bytes on disk
    static constexpr std::uint32_t kFormatVersion = 1;

    void save(const std::string& path) const {
        const std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw ModelError("cannot write " + tmp);
            write_stream(out);
            if (!out) throw ModelError("write failure on " + tmp);
        }
        std::filesystem::rename(tmp, path);
    }

    static JointModel load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ModelError("cannot open " + path);
        return read_stream(in, path);
    }

    void write_stream(std::ostream& out) const {
        out.write(kMagic, 16);
        w_u32(out, kFormatVersion);
        w_u8(out, ablation_.tag_to_parse);
        w_u8(out, ablation_.parse_to_tag);
        w_i32(out, hp_.word_dim);
        w_i32(out, hp_.tag_dim);
        w_i32(out, hp_.char_dim);
        w_i32(out, hp_.enc_hidden);
        w_i32(out, hp_.tag_hidden);
        w_i32(out, hp_.char_hidden);
        w_i32(out, hp_.classifier_hidden);
        w_f64(out, hp_.learning_rate);
        w_i32(out, hp_.epochs);
        w_f64(out, hp_.clip_norm);
        w_f64(out, hp_.l2_lambda);
        w_f64(out, hp_.dropout);
        w_f64(out, hp_.beta1);
        w_f64(out, hp_.beta2);
        w_f64(out, hp_.adam_epsilon);
        w_u64(out, hp_.seed);
        w_u8(out, hp_.relu_hidden);
        w_f64(out, hp_.singleton_unk_prob);
        w_u8(out, hp_.l2_on_embeddings);
        w_i32(out, hp_.min_word_count);
        w_u8(out, hp_.finetune_pretrained);
        w_i32(out, enc_.pretrained_dim);
        write_strmap(out, vocab_.words);
        w_u32(out, static_cast<std::uint32_t>(vocab_.word_freq.size()));
        for (long f : vocab_.word_freq) w_u64(out, static_cast<std::uint64_t>(f));
        write_strmap(out, vocab_.tags);
        write_strmap(out, vocab_.labels);
        write_strmap(out, vocab_.chars);
        w_u32(out, static_cast<std::uint32_t>(store_.size()));
        for (std::size_t i = 0; i < store_.size(); ++i) {
            const Parameter& p = store_[i];
            w_str(out, p.name);
            w_u8(out, p.trainable);
            w_u8(out, p.l2_exempt);
            w_u32(out, static_cast<std::uint32_t>(p.rows()));
            w_u32(out, static_cast<std::uint32_t>(p.cols()));
            for (long k = 0; k < p.size(); ++k) {
                const float f = static_cast<float>(p.value.data()[k]);
                out.write(reinterpret_cast<const char*>(&f), sizeof(float));
            }
        }
    }

    static JointModel read_stream(std::istream& in, const std::string& path) {
        char magic[16];
        in.read(magic, 16);
        if (!in || std::string(magic, 16) != std::string(kMagic, 16))
            throw CorruptModelError(path + ": not a jointparse model file");
        const std::uint32_t version = r_u32(in, path);
        if (version != kFormatVersion)
            throw ModelVersionError(path + ": unsupported model format version " +
                                    std::to_string(version) + " (expected " +
                                    std::to_string(kFormatVersion) + ")");
        AblationConfig ablation;
        ablation.tag_to_parse = r_u8(in, path);
        ablation.parse_to_tag = r_u8(in, path);
        Hyperparams hp;
        hp.word_dim = r_i32(in, path);
        hp.tag_dim = r_i32(in, path);
        hp.char_dim = r_i32(in, path);
        hp.enc_hidden = r_i32(in, path);
        hp.tag_hidden = r_i32(in, path);
        hp.char_hidden = r_i32(in, path);
        hp.classifier_hidden = r_i32(in, path);
        hp.learning_rate = r_f64(in, path);
        hp.epochs = r_i32(in, path);
        hp.clip_norm = r_f64(in, path);
        hp.l2_lambda = r_f64(in, path);
        hp.dropout = r_f64(in, path);
        hp.beta1 = r_f64(in, path);
        hp.beta2 = r_f64(in, path);
        hp.adam_epsilon = r_f64(in, path);
        hp.seed = r_u64(in, path);
        hp.relu_hidden = r_u8(in, path);
        hp.singleton_unk_prob = r_f64(in, path);
        hp.l2_on_embeddings = r_u8(in, path);
        hp.min_word_count = r_i32(in, path);
        hp.finetune_pretrained = r_u8(in, path);
        const int pretrained_dim = r_i32(in, path);

        Vocab vocab;
        read_strmap(in, path, vocab.words);
        const std::uint32_t n_freq = r_u32(in, path);
        if (n_freq != static_cast<std::uint32_t>(vocab.words.size()))
            throw CorruptModelError(path + ": frequency table size mismatch");
        vocab.word_freq.assign(n_freq, 0);
        for (std::uint32_t i = 0; i < n_freq; ++i)
            vocab.word_freq[i] = static_cast<long>(r_u64(in, path));
        read_strmap(in, path, vocab.tags);
        read_strmap(in, path, vocab.labels);
        read_strmap(in, path, vocab.chars);
        vocab.min_word_count = hp.min_word_count;

        JointModel model(std::move(vocab), hp, ablation, pretrained_dim);
        const std::uint32_t n_params = r_u32(in, path);
        if (n_params != model.store_.size())
            throw CorruptModelError(path + ": expected " + std::to_string(model.store_.size()) +
                                    " parameters, file has " + std::to_string(n_params));
        for (std::uint32_t i = 0; i < n_params; ++i) {
            const std::string name = r_str(in, path);
            Parameter* p = model.store_.find(name);
            if (!p) throw CorruptModelError(path + ": unknown parameter " + name);
            p->trainable = r_u8(in, path);
            p->l2_exempt = r_u8(in, path);
            const std::uint32_t rows = r_u32(in, path);
            const std::uint32_t cols = r_u32(in, path);
            if (rows != static_cast<std::uint32_t>(p->rows()) ||
                cols != static_cast<std::uint32_t>(p->cols()))
                throw CorruptModelError(path + ": shape mismatch for " + name);
            for (long k = 0; k < p->size(); ++k) {
                float f;
                in.read(reinterpret_cast<char*>(&f), sizeof(float));
                if (!in) throw CorruptModelError(path + ": truncated parameter data");
                p->value.data()[k] = static_cast<double>(f);
            }
        }
        in.peek();
        if (!in.eof()) throw CorruptModelError(path + ": trailing bytes after parameter data");
        return model;
    }

private:
    struct Classifier {
        Parameter* w1 = nullptr;
        Parameter* b1 = nullptr;
        Parameter* w2 = nullptr;
        Parameter* b2 = nullptr;
    };

    void build_classifier(Classifier& c, const std::string& prefix, int input_dim,
                          int n_classes) {
        c.w1 = &store_.add(prefix + ".w1", hp_.classifier_hidden, input_dim);
        c.b1 = &store_.add(prefix + ".b1", hp_.classifier_hidden, 1);
        c.w2 = &store_.add(prefix + ".w2", n_classes, hp_.classifier_hidden);
        c.b2 = &store_.add(prefix + ".b2", n_classes, 1);
    }

    void init_params() {
        Rng rng(hp_.seed);
        for (std::size_t i = 0; i < store_.size(); ++i) {
            Parameter& p = store_[i];
            if (!p.trainable) continue;  // pretrained slice is filled separately
            if (p.name.size() > 8 && p.name.compare(p.name.size() - 8, 8, "b_forget") == 0) {
                p.value.setConstant(1.0);
            } else {
                p.init_glorot(rng);
            }
        }
    }

    Action action_from(ClassifierKind kind, int class_idx) const {
        switch (kind) {
            case ClassifierKind::Structural:
                if (class_idx == 0) return shift_action();
                if (class_idx == 1) return left_action();
                return right_action();
            case ClassifierKind::Tagging:
                return tag_action(class_idx);
            case ClassifierKind::Labeling:
                return label_action(class_idx);
        }
        throw ModelError("bad classifier kind");
    }

    static int class_index(const Action& a) {
        switch (a.type) {
            case ActionType::Shift: return 0;
            case ActionType::Left: return 1;
            case ActionType::Right: return 2;
            case ActionType::Tag:
            case ActionType::Label: return a.arg;
        }
        return -1;
    }

    Tape::NodeId step_logits(Tape& tape, const Configuration& c,
                             const std::vector<Tape::NodeId>& xs, const TagChain& chain,
                             ClassifierKind kind, const EncodeOptions& opts) {
        FeatureSlots slots;
        const Classifier* cl = nullptr;
        switch (kind) {
            case ClassifierKind::Tagging:
                slots = extract_tag_features(tape, enc_, c, xs, chain, ablation_);
                cl = &tag_;
                break;
            case ClassifierKind::Structural:
                slots = extract_parse_features(tape, enc_, c, xs, chain, ablation_);
                cl = &parse_;
                break;
            case ClassifierKind::Labeling:
                slots = extract_label_features(tape, enc_, c, xs, chain, ablation_);
                cl = &label_;
                break;
        }
        auto hidden = tape.affine(*cl->w1, *cl->b1, tape.concat(slots.nodes()));
        if (hp_.relu_hidden) hidden = tape.relu(hidden);
        if (opts.train && opts.dropout > 0)
            hidden = tape.mul_const(hidden,
                                    dropout_mask(hp_.classifier_hidden, opts.dropout, *opts.rng));
        return tape.affine(*cl->w2, *cl->b2, hidden);
    }

    std::vector<int> resolve_word_ids(const Sentence& sent, bool train_mode, Rng* rng) {
        std::vector<int> ids;
        ids.reserve(sent.tokens.size());
        for (const auto& tok : sent.tokens) {
            int id = vocab_.word_id(tok.form);
            // singleton replacement: train the unknown embedding on words
            // seen exactly once in the training corpus
            if (train_mode && id != Vocab::kUnknownId && vocab_.word_freq[id] == 1 &&
                rng->bernoulli(hp_.singleton_unk_prob))
                id = Vocab::kUnknownId;
            ids.push_back(id);
        }
        return ids;
    }

    double teacher_forced(const Sentence& sent, bool train_mode, Rng* rng, bool do_backward,
                          std::vector<StepProbe>* probes) {
        const int n = sent.size();
        GoldParse gold = numerize(sent, vocab_);
        for (int i = 0; i < n; ++i) {
            if (gold.tags[i] < 0)
                throw DataError("token " + std::to_string(i + 1) + " ('" +
                                sent.tokens[i].form + "') has no trainable gold tag");
            if (gold.heads[i] > 0 && gold.labels[i] < 0)
                throw DataError("token " + std::to_string(i + 1) + " ('" +
                                sent.tokens[i].form + "') has no trainable gold label");
        }
        const auto actions = oracle_sequence(gold);

        Tape tape;
        EncodeOptions opts{train_mode, train_mode ? hp_.dropout : 0.0, rng};
        std::vector<std::string> forms;
        for (const auto& tok : sent.tokens) forms.push_back(tok.form);
        const auto xs =
            encode_sentence(tape, enc_, vocab_, forms, resolve_word_ids(sent, train_mode, rng),
                            opts);
        TagChain chain(tape, enc_, n);
        Configuration c(n);
        std::vector<Tape::NodeId> losses;
        losses.reserve(actions.size());
        for (const Action& a : actions) {
            const ClassifierKind kind = classifier_kind(c);
            const auto logits = step_logits(tape, c, xs, chain, kind, opts);
            const int gold_class = class_index(a);
            losses.push_back(tape.softmax_xent(logits, gold_class));
            if (probes) probes->push_back({kind, tape.probs(losses.back()), gold_class, a});
            c = apply_action(c, a);
            if (a.type == ActionType::Tag) chain.advance(tape, a.arg, opts);
        }
        const auto total = tape.sum(losses);
        if (do_backward) tape.backward(total);
        return tape.value(total)[0];
    }

    // POS/UAS/LAS of greedy decodes against gold, on id level. Unseen gold
    // tags or labels numerize to -1 and therefore count as wrong.
    void evaluate_on(const Corpus& dev, double& pos, double& uas, double& las) {
        long tokens = 0, pos_ok = 0, uas_ok = 0, las_ok = 0;
        for (const auto& sent : dev.sentences) {
            const GoldParse gold = numerize(sent, vocab_);
            const DecodeOutput out = greedy_decode(sent);
            std::vector<int> pred_heads(sent.size(), 0), pred_labels(sent.size(), -1);
            for (const auto& arc : out.tree.arcs) {
                pred_heads[arc.modifier - 1] = arc.head;
                pred_labels[arc.modifier - 1] = arc.label;
            }
            for (int i = 0; i < sent.size(); ++i) {
                ++tokens;
                pos_ok += out.tags[i] == gold.tags[i];
                if (gold.heads[i] < 0) continue;  // unannotated token
                const bool head_ok = pred_heads[i] == gold.heads[i];
                uas_ok += head_ok;
                las_ok += head_ok && (gold.heads[i] == 0 || pred_labels[i] == gold.labels[i]);
            }
        }
        pos = tokens ? static_cast<double>(pos_ok) / tokens : 0;
        uas = tokens ? static_cast<double>(uas_ok) / tokens : 0;
        las = tokens ? static_cast<double>(las_ok) / tokens : 0;
    }

    // little-endian fixed-width scalar IO
    static void w_u8(std::ostream& o, bool v) {
        const unsigned char b = v ? 1 : 0;
        o.write(reinterpret_cast<const char*>(&b), 1);
    }
    static void w_u32(std::ostream& o, std::uint32_t v) {
        o.write(reinterpret_cast<const char*>(&v), 4);
    }
    static void w_i32(std::ostream& o, std::int32_t v) {
        o.write(reinterpret_cast<const char*>(&v), 4);
    }
    static void w_u64(std::ostream& o, std::uint64_t v) {
        o.write(reinterpret_cast<const char*>(&v), 8);
    }
    static void w_f64(std::ostream& o, double v) {
        o.write(reinterpret_cast<const char*>(&v), 8);
    }
    static void w_str(std::ostream& o, const std::string& s) {
        w_u32(o, static_cast<std::uint32_t>(s.size()));
        o.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    static void write_strmap(std::ostream& o, const StrMap& m) {
        w_u32(o, static_cast<std::uint32_t>(m.size()));
        for (const auto& s : m.strings()) w_str(o, s);
    }

    static bool r_u8(std::istream& i, const std::string& path) {
        unsigned char b;
        i.read(reinterpret_cast<char*>(&b), 1);
        if (!i) throw CorruptModelError(path + ": truncated file");
        return b != 0;
    }
    static std::uint32_t r_u32(std::istream& i, const std::string& path) {
        std::uint32_t v;
        i.read(reinterpret_cast<char*>(&v), 4);
        if (!i) throw CorruptModelError(path + ": truncated file");
        return v;
    }
    static std::int32_t r_i32(std::istream& i, const std::string& path) {
        std::int32_t v;
        i.read(reinterpret_cast<char*>(&v), 4);
        if (!i) throw CorruptModelError(path + ": truncated file");
        return v;
    }
    static std::uint64_t r_u64(std::istream& i, const std::string& path) {
        std::uint64_t v;
        i.read(reinterpret_cast<char*>(&v), 8);
        if (!i) throw CorruptModelError(path + ": truncated file");
        return v;
    }
    static double r_f64(std::istream& i, const std::string& path) {
        double v;
        i.read(reinterpret_cast<char*>(&v), 8);
        if (!i) throw CorruptModelError(path + ": truncated file");
        return v;
    }
    static std::string r_str(std::istream& i, const std::string& path) {
        const std::uint32_t len = r_u32(i, path);
        if (len > (1u << 24)) throw CorruptModelError(path + ": implausible string length");
        std::string s(len, '\0');
        i.read(s.data(), len);
        if (!i) throw CorruptModelError(path + ": truncated file");
        return s;
    }
    static void read_strmap(std::istream& i, const std::string& path, StrMap& m) {
        const std::uint32_t n = r_u32(i, path);
        for (std::uint32_t k = 0; k < n; ++k) {
            const std::string s = r_str(i, path);
            const int id = m.add(s);
            if (id != static_cast<int>(k))
                throw CorruptModelError(path + ": duplicate vocabulary entry '" + s + "'");
        }
    }

    Vocab vocab_;
    Hyperparams hp_;
    AblationConfig ablation_;
    ParameterStore store_;
    Encoder enc_;
    Classifier tag_, parse_, label_;
};

// Writes decode results back into a sentence's annotation fields. The root
// word gets head 0 and the configured root label.
inline void apply_predictions(Sentence& sent, const DecodeOutput& out, const Vocab& vocab,
                              const std::string& root_label = "root") {
    std::vector<int> heads(sent.size(), 0);
    std::vector<int> labels(sent.size(), -1);
    for (const auto& arc : out.tree.arcs) {
        heads[arc.modifier - 1] = arc.head;
        labels[arc.modifier - 1] = arc.label;
    }
    for (int i = 0; i < sent.size(); ++i) {
        Token& tok = sent.tokens[i];
        tok.tag = vocab.tags.str(out.tags[i]);
        tok.head = heads[i];
        tok.label = heads[i] == 0 ? root_label : vocab.labels.str(labels[i]);
    }
}

}  // namespace jointparse
