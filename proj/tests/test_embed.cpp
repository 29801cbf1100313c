#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "crisis/common.hpp"
#include "crisis/embed.hpp"
#include "crisis/io.hpp"
#include "crisis/lingfeat.hpp"
#include "crisis/translate.hpp"
#include "support/synthetic.hpp"

using namespace crisis;

namespace {

VectorTable tiny_table() {
    Eigen::RowVectorXd a(3), b(3);
    a << 1.0, 2.0, 3.0;
    b << -1.0, 0.0, 5.0;
    return VectorTable::from_entries({{"alpha", a}, {"beta", b}});
}

// Straight-line re-implementation of the mean used as an oracle below.
Eigen::VectorXd naive_mean(const std::vector<std::string>& tokens,
                           const VectorTable& table, bool oov_in_denominator) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dim());
    int denom = 0;
    for (const auto& t : tokens) {
        auto row = table.row_of(t);
        if (row) {
            sum += table.vector_of(t).transpose();
            ++denom;
        } else if (oov_in_denominator) {
            ++denom;  // zero vector still counts
        }
    }
    if (denom == 0) return Eigen::VectorXd::Zero(table.dim());
    return sum / denom;
}

}  // namespace

TEST_CASE("vector table lookup") {
    VectorTable t = tiny_table();
    CHECK(t.dim() == 3);
    CHECK(t.size() == 2);
    CHECK(t.row_of("alpha").has_value());
    CHECK_FALSE(t.row_of("gamma").has_value());
    CHECK(t.vector_of("beta")(2) == 5.0);
    CHECK_THROWS(t.vector_of("gamma"));
}

TEST_CASE("vector table text format, optional count header and warnings") {
    std::string dir = synth::scratch_dir("embed_vectors");
    {
        std::ofstream out(dir + "/with_header.txt");
        out << "2 3\n"
            << "alpha 1 2 3\n"
            << "beta -1 0 5\n";
        std::ofstream out2(dir + "/plain.txt");
        out2 << "alpha 1 2 3\n"
             << "short 1 2\n"  // wrong width, skipped with a warning
             << "beta -1 0 5\n";
    }
    VectorTable with_header = VectorTable::load(dir + "/with_header.txt");
    CHECK(with_header.size() == 2);
    CHECK(with_header.dim() == 3);

    std::vector<std::string> warnings;
    VectorTable plain = VectorTable::load(dir + "/plain.txt", 3, &warnings);
    CHECK(plain.size() == 2);
    CHECK(warnings.size() == 1);

    CHECK_THROWS(VectorTable::load(dir + "/missing.txt"));
}

TEST_CASE("token mean equals the naive computation on hash-built tables") {
    Corpus corpus = synth::make_corpus({1, 6, 5, 13});
    synth::Resources res(corpus);
    const VectorTable& glove = res.glove();

    Rng rng(717);
    std::vector<std::string> vocab;
    for (const Message& m : corpus.messages())
        for (const auto& tok : tokenize(m.text, TokenNorm::Placeholdered).tokens)
            vocab.push_back(tok);

    for (int iter = 0; iter < 300; ++iter) {
        std::vector<std::string> tokens;
        int n = static_cast<int>(rng.uniform_below(8));
        for (int k = 0; k < n; ++k) {
            if (rng.uniform01() < 0.2) tokens.push_back("oov_" + std::to_string(k));
            else tokens.push_back(vocab[rng.uniform_below(vocab.size())]);
        }
        for (bool mode : {true, false}) {
            Eigen::VectorXd got = embed_mean(tokens, glove, mode);
            Eigen::VectorXd want = naive_mean(tokens, glove, mode);
            CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("token mean: oov words dilute the average only in the default mode") {
    VectorTable t = tiny_table();
    std::vector<std::string> tokens = {"alpha", "nope"};
    Eigen::VectorXd with_oov = embed_mean(tokens, t, true);
    Eigen::VectorXd without = embed_mean(tokens, t, false);
    CHECK(with_oov(0) == doctest::Approx(0.5));   // (1 + 0) / 2
    CHECK(without(0) == doctest::Approx(1.0));    // 1 / 1
    CHECK(embed_mean({}, t).cwiseAbs().maxCoeff() == 0.0);
    CHECK(embed_mean({"nope", "nada"}, t, false).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("contextual pooling: stored vectors pass through, matrices average") {
    ContextualCache cache;
    cache.set_model("toy");

    Eigen::MatrixXd single(1, 2);
    single << 4.0, 6.0;
    cache.put("vec", single);

    Eigen::MatrixXd padded(3, 2);
    padded << 1.0, 1.0, 3.0, 3.0, 0.0, 0.0;  // last row is padding
    cache.put("mat", padded);

    Eigen::VectorXd v = pool_contextual(cache, "vec");
    CHECK(v(0) == 4.0);
    CHECK(v(1) == 6.0);

    Eigen::VectorXd m = pool_contextual(cache, "mat");
    CHECK(m(0) == doctest::Approx(2.0));
    CHECK(m(1) == doctest::Approx(2.0));

    CHECK_THROWS_WITH_AS(pool_contextual(cache, "absent"), doctest::Contains("toy"),
                         std::out_of_range);
}

TEST_CASE("contextual pooling: an all-padding matrix yields the zero vector") {
    ContextualCache cache;
    cache.set_model("toy");
    cache.put("zeros", Eigen::MatrixXd::Zero(2, 3));
    CHECK(pool_contextual(cache, "zeros").cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("contextual cache jsonl round trip") {
    std::string dir = synth::scratch_dir("embed_ctx");
    {
        std::ofstream out(dir + "/enc.jsonl");
        out << R"({"id":"a","model":"toy","vector":[1.0,2.0]})" << "\n"
            << R"({"id":"b","model":"toy","matrix":[[1.0,1.0],[3.0,5.0]]})" << "\n";
        std::ofstream mixed(dir + "/mixed.jsonl");
        mixed << R"({"id":"c","model":"other","vector":[9.0,9.0]})" << "\n";
    }
    ContextualCache cache = ContextualCache::load(dir + "/enc.jsonl", "toy");
    CHECK(cache.size() == 2);
    CHECK(cache.contains("a"));
    CHECK(cache.dim() == 2);
    Eigen::VectorXd b = pool_contextual(cache, "b");
    CHECK(b(0) == doctest::Approx(2.0));
    CHECK(b(1) == doctest::Approx(3.0));

    // Caches are one file per model; a foreign record means a wiring mistake.
    CHECK_THROWS_WITH_AS(ContextualCache::load(dir + "/mixed.jsonl", "toy"),
                         doctest::Contains("does not match"), std::runtime_error);
}

TEST_CASE("representation names, parsing and widths") {
    struct Row {
        Representation rep;
        const char* name;
        int width;
    };
    const Row rows[] = {
        {Representation::LF, "lf", 48},
        {Representation::MtGlove, "mt_glove", 100},
        {Representation::Muse, "muse", 300},
        {Representation::MuseLf, "muse_lf", 348},
        {Representation::MBert, "mbert", 768},
        {Representation::MtBert, "mt_bert", 768},
        {Representation::XlmR, "xlm_r", 768},
    };
    for (const Row& r : rows) {
        CHECK(representation_name(r.rep) == r.name);
        CHECK(parse_representation(r.name) == r.rep);
        CHECK(representation_width(r.rep) == r.width);
    }
    CHECK_THROWS(parse_representation("word2vec"));
}

TEST_CASE("every representation builds with its advertised shape and column names") {
    Corpus corpus = synth::make_corpus({1, 5, 4, 23});
    synth::Resources res(corpus);
    std::vector<Message> sample(corpus.messages().begin(),
                                corpus.messages().begin() + 12);

    for (Representation rep : kAllRepresentations) {
        FeatureMatrix fm = build_representation(sample, rep, res.view());
        CHECK(fm.values.rows() == 12);
        CHECK(fm.values.cols() == representation_width(rep));
        REQUIRE(fm.column_names.size() ==
                static_cast<size_t>(representation_width(rep)));
        CHECK(fm.values.allFinite());
    }

    FeatureMatrix lf = build_representation(sample, Representation::LF, res.view());
    CHECK(lf.column_names.front() == "char_count");

    FeatureMatrix glove = build_representation(sample, Representation::MtGlove,
                                               res.view());
    CHECK(glove.column_names.front() == "mt_glove_0");
    CHECK(glove.column_names.back() == "mt_glove_99");

    FeatureMatrix muse_lf = build_representation(sample, Representation::MuseLf,
                                                 res.view());
    CHECK(muse_lf.column_names.front() == "muse_0");
    CHECK(muse_lf.column_names[299] == "muse_299");
    CHECK(muse_lf.column_names[300] == "char_count");

    for (auto [rep, prefix] : {std::pair{Representation::MBert, "mbert_0"},
                               std::pair{Representation::MtBert, "mt_bert_0"},
                               std::pair{Representation::XlmR, "xlm_r_0"}}) {
        FeatureMatrix fm = build_representation(sample, rep, res.view());
        CHECK(fm.column_names.front() == prefix);
    }
}

TEST_CASE("muse_lf concatenates the pieces unchanged") {
    Corpus corpus = synth::make_corpus({1, 4, 3, 29});
    synth::Resources res(corpus);
    std::vector<Message> sample(corpus.messages().begin(),
                                corpus.messages().begin() + 5);
    FeatureMatrix muse = build_representation(sample, Representation::Muse, res.view());
    FeatureMatrix lf = build_representation(sample, Representation::LF, res.view());
    FeatureMatrix both = build_representation(sample, Representation::MuseLf,
                                              res.view());
    CHECK((both.values.leftCols(300) - muse.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((both.values.rightCols(48) - lf.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pivot-language text drives the translated representations") {
    Corpus corpus = synth::make_corpus({1, 6, 5, 31});
    synth::Resources res(corpus);

    // A Spanish message with a stored pivot rendering and none of the
    // decorations (mentions, urls, glued punctuation) that survive word-by-
    // word translation as extra tokens.
    const Message* stored = nullptr;
    for (const Message& m : corpus.messages())
        if (m.language == "es" && !m.translated_text.empty() &&
            m.text.find('@') == std::string::npos &&
            m.text.find('!') == std::string::npos &&
            m.text.find("http") == std::string::npos) {
            stored = &m;
            break;
        }
    REQUIRE(stored != nullptr);

    FeatureMatrix with_stored =
        build_representation({*stored}, Representation::MtGlove, res.view());
    Message no_stored = *stored;
    no_stored.translated_text.clear();
    FeatureMatrix via_translator =
        build_representation({no_stored}, Representation::MtGlove, res.view());
    // The dictionary translator reproduces the stored rendering token by token.
    CHECK((with_stored.values - via_translator.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("missing translations are reported once, listing every message") {
    Corpus corpus = synth::make_corpus({1, 4, 3, 37});
    EmbeddingResources bare;  // no translator
    synth::Resources full(corpus);
    bare.glove = &full.glove();

    std::vector<Message> sample;
    for (const Message& m : corpus.messages())
        if (m.language == "it" && m.translated_text.empty()) sample.push_back(m);
    REQUIRE(sample.size() >= 2);

    try {
        build_representation(sample, Representation::MtGlove, bare);
        FAIL("expected an error about missing translations");
    } catch (const std::runtime_error& e) {
        std::string what = e.what();
        for (const Message& m : sample) {
            INFO(what);
            CHECK(what.find(m.id) != std::string::npos);
        }
    }
}

TEST_CASE("contextual representations fail when the cache lacks a message") {
    Corpus corpus = synth::make_corpus({1, 4, 3, 41});
    synth::Resources res(corpus);
    Message ghost = corpus.messages()[0];
    ghost.id = "never_encoded";
    CHECK_THROWS_WITH_AS(
        build_representation({ghost}, Representation::MBert, res.view()),
        doctest::Contains("never_encoded"), std::out_of_range);
}

TEST_CASE("matrix csv export carries ids, labels and column names") {
    Corpus corpus = synth::make_corpus({1, 4, 3, 43});
    synth::Resources res(corpus);
    std::vector<Message> sample(corpus.messages().begin(),
                                corpus.messages().begin() + 3);
    FeatureMatrix fm = build_representation(sample, Representation::LF, res.view());
    std::string dir = synth::scratch_dir("embed_csv");
    save_matrix_csv(fm, sample, dir + "/m.csv");

    Table t = read_csv(dir + "/m.csv");
    REQUIRE(t.header.size() == 50);
    CHECK(t.header[0] == "id");
    CHECK(t.header[1] == "label");
    CHECK(t.header[2] == "char_count");
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0][0] == sample[0].id);
    CHECK(t.rows[0][1] == label_name(sample[0].label));
}
