#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "jointparse/gradcheck.hpp"
#include "jointparse/model.hpp"
#include "jointparse/synthetic.hpp"

using namespace jointparse;

namespace {

Hyperparams tiny_hp(std::uint64_t seed = 1) {
    Hyperparams hp;
    hp.word_dim = 5;
    hp.tag_dim = 3;
    hp.char_dim = 3;
    hp.enc_hidden = 4;
    hp.tag_hidden = 3;
    hp.char_hidden = 3;
    hp.classifier_hidden = 6;
    hp.seed = seed;
    return hp;
}

Corpus figure1_corpus() {
    std::istringstream in(
        "1\tHe\t_\tPRP\t_\t_\t2\tnsubj\t_\t_\n"
        "2\twon\t_\tVBD\t_\t_\t0\troot\t_\t_\n"
        "3\tthe\t_\tDT\t_\t_\t4\tdet\t_\t_\n"
        "4\tgame\t_\tNN\t_\t_\t2\tdobj\t_\t_\n\n");
    return read_conll(in, Dialect::ConllU);
}

// five tags, one label; holds the 1-word closed-form sentence
Corpus five_tag_corpus() {
    std::istringstream in(
        "1\ta\t_\tt0\t_\t_\t2\tdep\t_\t_\n"
        "2\tb\t_\tt1\t_\t_\t0\troot\t_\t_\n\n"
        "1\tc\t_\tt2\t_\t_\t0\troot\t_\t_\n\n"
        "1\td\t_\tt3\t_\t_\t0\troot\t_\t_\n\n"
        "1\te\t_\tt4\t_\t_\t0\troot\t_\t_\n\n");
    return read_conll(in, Dialect::ConllU);
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name)
        : path((std::filesystem::temp_directory_path() / name).string()) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("action_distribution shapes and the zero-model uniform case") {
    Corpus corpus = figure1_corpus();
    JointModel model(build_vocab(corpus), tiny_hp(), {});
    model.params().zero_values();
    const Sentence& sent = corpus.sentences[0];

    DecodeState state = model.begin_decode(sent);

    SECTION("initial structural state: uniform thirds, masked to Shift") {
        Vec p = model.action_distribution(state);
        REQUIRE(p.size() == 3);
        CHECK(p.isApprox(Vec::Constant(3, 1.0 / 3.0), 1e-12));
        Vec masked = model.masked_action_distribution(state);
        CHECK(masked[0] == Catch::Approx(1.0));
        CHECK(masked[1] == 0.0);
        CHECK(masked[2] == 0.0);
    }

    SECTION("tagging state has |T| classes") {
        model.advance(state, shift_action());
        Vec p = model.action_distribution(state);
        CHECK(p.size() == 4);
        CHECK(p.isApprox(Vec::Constant(4, 0.25), 1e-12));
    }

    SECTION("structural state with a two-deep stack keeps all three legal") {
        for (const auto& a :
             {shift_action(), tag_action(0), shift_action(), tag_action(1)})
            model.advance(state, a);
        Vec masked = model.masked_action_distribution(state);
        CHECK(masked.isApprox(Vec::Constant(3, 1.0 / 3.0), 1e-12));
    }

    SECTION("terminal state is an error") {
        Corpus one = five_tag_corpus();
        JointModel m2(build_vocab(one), tiny_hp(), {});
        DecodeState s2 = m2.begin_decode(one.sentences[1]);
        m2.advance(s2, shift_action());
        m2.advance(s2, tag_action(0));
        CHECK_THROWS_AS(m2.action_distribution(s2), TransitionError);
    }
}

TEST_CASE("sentence_nll closed forms on a zero-initialized model") {
    SECTION("N=1 with five tags: ln 3 + ln 5") {
        Corpus corpus = five_tag_corpus();
        JointModel model(build_vocab(corpus), tiny_hp(), {});
        model.params().zero_values();
        const double nll = model.sentence_nll(corpus.sentences[1]);  // 1-word sentence
        CHECK(std::abs(nll - (std::log(3.0) + std::log(5.0))) < 1e-9);
    }

    SECTION("N=4 with four tags and three labels: 10 ln 3 + 4 ln 4") {
        Corpus corpus = figure1_corpus();
        JointModel model(build_vocab(corpus), tiny_hp(), {});
        model.params().zero_values();
        const double nll = model.sentence_nll(corpus.sentences[0]);
        CHECK(std::abs(nll - (10 * std::log(3.0) + 4 * std::log(4.0))) < 1e-9);
    }
}

TEST_CASE("step probabilities factorize the sentence probability") {
    Corpus corpus = figure1_corpus();
    JointModel model(build_vocab(corpus), tiny_hp(3), {});
    const Sentence& sent = corpus.sentences[0];

    auto probes = model.forced_steps(sent);
    REQUIRE(probes.size() == 14);  // 4N-2
    double log_prob = 0;
    for (const auto& s : probes) log_prob += std::log(s.probs[s.gold_class]);
    CHECK(std::abs(-log_prob - model.sentence_nll(sent)) < 1e-9);

    int structural = 0, tagging = 0, labeling = 0;
    for (const auto& s : probes) {
        structural += s.kind == ClassifierKind::Structural;
        tagging += s.kind == ClassifierKind::Tagging;
        labeling += s.kind == ClassifierKind::Labeling;
    }
    CHECK(structural == 7);
    CHECK(tagging == 4);
    CHECK(labeling == 3);
}

TEST_CASE("nll rejects bad gold input") {
    Corpus corpus = figure1_corpus();
    JointModel model(build_vocab(corpus), tiny_hp(), {});

    SECTION("non-projective gold") {
        std::istringstream in(
            "1\tHe\t_\tPRP\t_\t_\t3\tnsubj\t_\t_\n"
            "2\twon\t_\tVBD\t_\t_\t4\tdobj\t_\t_\n"
            "3\tthe\t_\tDT\t_\t_\t0\troot\t_\t_\n"
            "4\tgame\t_\tNN\t_\t_\t3\tdet\t_\t_\n\n");
        Corpus bad = read_conll(in, Dialect::ConllU);
        CHECK_THROWS_AS(model.sentence_nll(bad.sentences[0]), TransitionError);
    }

    SECTION("missing gold tag") {
        Corpus c2 = figure1_corpus();
        c2.sentences[0].tokens[1].tag.clear();
        CHECK_THROWS_AS(model.sentence_nll(c2.sentences[0]), DataError);
    }
}

TEST_CASE("greedy_decode always produces complete projective output") {
    Corpus train = synthetic_corpus(10, 12, 3, 2, 2, 7, 77);
    JointModel model(build_vocab(train), tiny_hp(9), {});

    // fresh random model, sentences with unseen words included
    Corpus input = synthetic_corpus(30, 20, 3, 2, 1, 7, 78);
    for (const auto& sent : input.sentences) {
        DecodeOutput out = model.greedy_decode(sent);
        const int n = sent.size();
        CHECK(out.actions.size() == static_cast<std::size_t>(4 * n - 2));
        REQUIRE(out.tags.size() == static_cast<std::size_t>(n));
        REQUIRE(out.tree.arcs.size() == static_cast<std::size_t>(n - 1));
        for (const auto& arc : out.tree.arcs) CHECK(arc.label != kUnlabeled);
        if (n > 1) CHECK(is_projective(out.tree));
        for (int t : out.tags) {
            CHECK(t >= 0);
            CHECK(t < model.n_tags());
        }
    }
}

TEST_CASE("zero model decodes a 1-word sentence to [Shift, Tag_0]") {
    Corpus corpus = five_tag_corpus();
    JointModel model(build_vocab(corpus), tiny_hp(), {});
    model.params().zero_values();
    DecodeOutput out = model.greedy_decode(corpus.sentences[1]);
    REQUIRE(out.actions.size() == 2);
    CHECK(out.actions[0] == shift_action());
    CHECK(out.actions[1] == tag_action(0));  // tie broken toward class 0
}

TEST_CASE("loss is invariant under tag/label relabeling with permuted parameters") {
    Corpus corpus = figure1_corpus();
    Vocab v1 = build_vocab(corpus);
    Hyperparams hp = tiny_hp(13);
    JointModel a(v1, hp, {});

    // permuted tag/label inventories: reversed insertion order
    Vocab v2;
    v2.words = v1.words;
    v2.chars = v1.chars;
    v2.word_freq = v1.word_freq;
    for (int i = v1.tags.size() - 1; i >= 0; --i) v2.tags.add(v1.tags.str(i));
    for (int i = v1.labels.size() - 1; i >= 0; --i) v2.labels.add(v1.labels.str(i));
    JointModel b(v2, hp, {});

    // copy parameters, permuting every tag- and label-indexed row
    auto perm_tag = [&](int old_id) { return v2.tags.find(v1.tags.str(old_id)); };
    auto perm_label = [&](int old_id) { return v2.labels.find(v1.labels.str(old_id)); };
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        const Parameter& src = a.params()[i];
        Parameter* dst = b.params().find(src.name);
        REQUIRE(dst != nullptr);
        if (src.name == "embed.tag") {
            for (int t = 0; t < a.n_tags(); ++t) dst->value.row(perm_tag(t)) = src.value.row(t);
        } else if (src.name == "classifier.tag.w2" || src.name == "classifier.tag.b2") {
            for (int t = 0; t < a.n_tags(); ++t) dst->value.row(perm_tag(t)) = src.value.row(t);
        } else if (src.name == "classifier.label.w2" || src.name == "classifier.label.b2") {
            for (int l = 0; l < a.n_labels(); ++l)
                dst->value.row(perm_label(l)) = src.value.row(l);
        } else {
            dst->value = src.value;
        }
    }

    const Sentence& sent = corpus.sentences[0];
    CHECK(std::abs(a.sentence_nll(sent) - b.sentence_nll(sent)) < 1e-12);
}

TEST_CASE("training overfits a 5-sentence corpus") {
    Corpus train = synthetic_corpus(5, 8, 3, 2, 2, 5, 101);
    Hyperparams hp = tiny_hp(5);
    hp.epochs = 40;
    hp.learning_rate = 0.01;
    JointModel model(build_vocab(train), hp, {});
    auto history = model.train(train, nullptr, nullptr);
    REQUIRE(history.size() == 40);
    CHECK(history[1].avg_loss < history[0].avg_loss);
    CHECK(history[2].avg_loss < history[1].avg_loss);
    CHECK(history.back().avg_loss < 0.2 * history.front().avg_loss);

    // decoding the training set should now be near-perfect on tags
    int pos_ok = 0, tokens = 0;
    for (const auto& sent : train.sentences) {
        const GoldParse gold = numerize(sent, model.vocab());
        const DecodeOutput out = model.greedy_decode(sent);
        for (int i = 0; i < sent.size(); ++i) {
            ++tokens;
            pos_ok += out.tags[i] == gold.tags[i];
        }
    }
    CHECK(pos_ok >= tokens - 1);
}

TEST_CASE("same-seed training is bit-reproducible") {
    Corpus train = synthetic_corpus(6, 8, 3, 2, 2, 5, 55);
    auto run = [&](std::uint64_t seed) {
        Hyperparams hp = tiny_hp(seed);
        hp.epochs = 3;
        JointModel model(build_vocab(train), hp, {});
        model.train(train, &train, nullptr);
        std::ostringstream out;
        model.write_stream(out);
        return out.str();
    };
    CHECK(run(7) == run(7));
    CHECK(run(7) != run(8));
}

TEST_CASE("save/load round trip") {
    Corpus train = synthetic_corpus(6, 8, 3, 2, 2, 5, 60);
    Corpus held_out = synthetic_corpus(4, 8, 3, 2, 2, 5, 61);
    Hyperparams hp = tiny_hp(21);
    hp.epochs = 2;
    JointModel model(build_vocab(train), hp, {});
    model.train(train, nullptr, nullptr);

    TempFile f("jointparse_test_model.bin");
    model.save(f.path);
    JointModel loaded = JointModel::load(f.path);

    SECTION("decodes agree on held-out sentences") {
        for (const auto& sent : held_out.sentences) {
            DecodeOutput a = model.greedy_decode(sent);
            DecodeOutput b = loaded.greedy_decode(sent);
            CHECK(a.tags == b.tags);
            CHECK(a.tree.arcs == b.tree.arcs);
        }
    }

    SECTION("hyperparameters and ablation travel with the file") {
        CHECK(loaded.hyperparams().classifier_hidden == hp.classifier_hidden);
        CHECK(loaded.hyperparams().seed == hp.seed);
        CHECK(loaded.ablation().tag_to_parse == model.ablation().tag_to_parse);
        CHECK(loaded.vocab().tags.size() == model.vocab().tags.size());
    }

    SECTION("saving the loaded model reproduces the bytes") {
        TempFile f2("jointparse_test_model2.bin");
        loaded.save(f2.path);
        std::ifstream a(f.path, std::ios::binary), b(f2.path, std::ios::binary);
        std::stringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        CHECK(sa.str() == sb.str());
    }

    SECTION("truncated file is a corrupt-model error") {
        std::ifstream in(f.path, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string bytes = buf.str();
        TempFile cut("jointparse_test_cut.bin");
        std::ofstream out(cut.path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        CHECK_THROWS_AS(JointModel::load(cut.path), CorruptModelError);
    }

    SECTION("bumped version byte is a version error, not corruption") {
        std::ifstream in(f.path, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        std::string bytes = buf.str();
        bytes[16] = 9;  // version u32 follows the 16-byte magic
        TempFile bumped("jointparse_test_bumped.bin");
        std::ofstream out(bumped.path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(JointModel::load(bumped.path), ModelVersionError);
    }

    SECTION("garbage file is a corrupt-model error") {
        TempFile junk("jointparse_test_junk.bin");
        std::ofstream out(junk.path, std::ios::binary);
        out << "definitely not a model";
        out.close();
        CHECK_THROWS_AS(JointModel::load(junk.path), CorruptModelError);
    }
}

TEST_CASE("ablation switches shrink the classifier inputs exactly") {
    Corpus corpus = figure1_corpus();
    Vocab v = build_vocab(corpus);
    Hyperparams hp = tiny_hp();
    const int x = 2 * hp.enc_hidden, t = hp.tag_hidden;

    JointModel full(v, hp, {true, true});
    CHECK(full.tag_classifier_input_dim() == 4 * x + 2 * t);
    CHECK(full.parse_classifier_input_dim() == 4 * x + 3 * t);
    CHECK(full.label_classifier_input_dim() == 2 * x + 2 * t);

    JointModel no_t2p(v, hp, {false, true});
    CHECK(no_t2p.parse_classifier_input_dim() == 4 * x);
    CHECK(no_t2p.label_classifier_input_dim() == 2 * x);
    CHECK(no_t2p.tag_classifier_input_dim() == 4 * x + 2 * t);

    JointModel no_p2t(v, hp, {true, false});
    CHECK(no_p2t.tag_classifier_input_dim() == 3 * x + t);
    CHECK(no_p2t.parse_classifier_input_dim() == 4 * x + 3 * t);

    JointModel neither(v, hp, {false, false});
    CHECK(neither.tag_classifier_input_dim() == 3 * x + t);
    CHECK(neither.parse_classifier_input_dim() == 4 * x);
    CHECK(neither.label_classifier_input_dim() == 2 * x);

    // every variant still trains and decodes
    Corpus train = synthetic_corpus(4, 8, 3, 2, 2, 4, 71);
    for (auto ab : {AblationConfig{true, true}, AblationConfig{false, true},
                    AblationConfig{true, false}, AblationConfig{false, false}}) {
        Hyperparams h2 = tiny_hp(31);
        h2.epochs = 1;
        JointModel m(build_vocab(train), h2, ab);
        m.train(train, nullptr, nullptr);
        DecodeOutput out = m.greedy_decode(train.sentences[0]);
        CHECK(out.tags.size() == static_cast<std::size_t>(train.sentences[0].size()));
    }
}

TEST_CASE("grad_check on the full pipeline") {
    Corpus train = synthetic_corpus(6, 6, 3, 2, 3, 4, 91);
    JointModel model(build_vocab(train), tiny_hp(17), {});
    const Sentence& sent = train.sentences[0];

    SECTION("analytic gradients match finite differences") {
        auto report = grad_check(model, sent, 1e-4);
        INFO("worst " << report.worst_param << "[" << report.worst_index
                      << "] rel err " << report.worst_rel_err);
        CHECK(report.passed());
        CHECK(report.n_checked == model.params().total_size());
    }

    SECTION("a corrupted gradient is detected and attributed") {
        auto report = grad_check(model, sent, 1e-4, [](ParameterStore& store) {
            Parameter* p = store.find("classifier.parse.w1");
            REQUIRE(p != nullptr);
            p->grad.array() += 0.05;
        });
        CHECK_FALSE(report.passed());
        CHECK(report.worst_param == "classifier.parse.w1");
    }

    SECTION("tolerance zero always fails") {
        auto report = grad_check(model, sent, 0.0);
        CHECK_FALSE(report.passed());
    }
}

TEST_CASE("dev selection keeps the best-LAS checkpoint") {
    Corpus train = synthetic_corpus(8, 8, 3, 2, 2, 5, 111);
    Corpus dev = synthetic_corpus(3, 8, 3, 2, 2, 5, 112);
    Hyperparams hp = tiny_hp(77);
    hp.epochs = 6;
    JointModel model(build_vocab(train), hp, {});
    auto history = model.train(train, &dev, nullptr);
    REQUIRE(history.size() == 6);
    for (const auto& m : history) CHECK(m.has_dev);

    // the final parameters reproduce the best epoch's dev LAS
    double best = -1;
    for (const auto& m : history) best = std::max(best, m.dev_las);
    long las_ok = 0, toks = 0;
    for (const auto& sent : dev.sentences) {
        const GoldParse gold = numerize(sent, model.vocab());
        const DecodeOutput out = model.greedy_decode(sent);
        std::vector<int> heads(sent.size(), 0), labels(sent.size(), -1);
        for (const auto& a : out.tree.arcs) {
            heads[a.modifier - 1] = a.head;
            labels[a.modifier - 1] = a.label;
        }
        for (int i = 0; i < sent.size(); ++i) {
            ++toks;
            const bool head_ok = heads[i] == gold.heads[i];
            las_ok += head_ok && (gold.heads[i] == 0 || labels[i] == gold.labels[i]);
        }
    }
    CHECK(static_cast<double>(las_ok) / toks == Catch::Approx(best).margin(1e-12));
}

TEST_CASE("apply_predictions fills the annotation columns") {
    Corpus corpus = figure1_corpus();
    JointModel model(build_vocab(corpus), tiny_hp(1), {});
    Sentence sent = corpus.sentences[0];
    DecodeOutput out = model.greedy_decode(sent);
    apply_predictions(sent, out, model.vocab());
    int roots = 0;
    for (const auto& tok : sent.tokens) {
        CHECK_FALSE(tok.tag.empty());
        CHECK(tok.head >= 0);
        CHECK_FALSE(tok.label.empty());
        if (tok.head == 0) {
            ++roots;
            CHECK(tok.label == "root");
        }
    }
    CHECK(roots == 1);
}
