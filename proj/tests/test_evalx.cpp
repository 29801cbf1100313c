#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "crisis/common.hpp"
#include "crisis/evalx.hpp"
#include "crisis/io.hpp"
#include "support/synthetic.hpp"

using namespace crisis;

namespace {

std::vector<LabelClass> labels_of(const std::string& pattern) {
    std::vector<LabelClass> out;
    for (char c : pattern)
        out.push_back(c == 'r' ? LabelClass::Related : LabelClass::NotRelated);
    return out;
}

ExperimentOptions quick_options(synth::Resources& res, int repeats = 2,
                                uint64_t seed = 1234) {
    ExperimentOptions options;
    options.repeats = repeats;
    options.master_seed = seed;
    options.forest.n_trees = 10;
    options.scenario.translator = &res.translator();
    return options;
}

ScenarioSpec es_quake(ScenarioKind kind) {
    ScenarioSpec spec;
    spec.kind = kind;
    spec.target_language = "es";
    spec.target_domain = "earthquake";
    return spec;
}

}  // namespace

TEST_CASE("confusion counts from aligned prediction and label lists") {
    ConfusionCounts c = confusion_counts(labels_of("rrnnrn"), labels_of("rnrnnn"));
    CHECK(c.tp == 1);  // position 0
    CHECK(c.fp == 2);  // positions 1, 4
    CHECK(c.fn == 1);  // position 2
    CHECK(c.tn == 2);  // positions 3, 5

    CHECK_THROWS_WITH_AS(confusion_counts(labels_of("rr"), labels_of("r")),
                         doctest::Contains("mismatch"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(confusion_counts({}, {}), doctest::Contains("empty"),
                         std::invalid_argument);
}

TEST_CASE("f1 on the worked example: tp=8 fp=2 fn=4") {
    ConfusionCounts c{8, 2, 0, 4};
    CHECK(f1_score(c, F1Mode::Positive) == 16.0 / 22.0);
}

TEST_CASE("f1 conventions when the positive class never occurs") {
    ConfusionCounts c{0, 0, 10, 0};
    CHECK(f1_score(c, F1Mode::Positive) == 0.0);
    CHECK(f1_score(c, F1Mode::Macro) == 0.5);     // negative F1 is 1, mean with 0
    CHECK(f1_score(c, F1Mode::Weighted) == 1.0);  // all support is negative
}

TEST_CASE("weighted f1 equals macro f1 when supports are balanced") {
    Rng rng(55);
    for (int iter = 0; iter < 100; ++iter) {
        long long support = 1 + static_cast<long long>(rng.uniform_below(50));
        long long tp = static_cast<long long>(rng.uniform_below(support + 1));
        long long tn = static_cast<long long>(rng.uniform_below(support + 1));
        // support_pos = tp + fn, support_neg = tn + fp, forced equal.
        ConfusionCounts c{tp, support - tn, tn, support - tp};
        CHECK(f1_score(c, F1Mode::Weighted) ==
              doctest::Approx(f1_score(c, F1Mode::Macro)).epsilon(1e-12));
    }
}

TEST_CASE("f1 mode names") {
    CHECK(f1_mode_name(F1Mode::Positive) == "positive");
    CHECK(f1_mode_name(F1Mode::Macro) == "macro");
    CHECK(f1_mode_name(F1Mode::Weighted) == "weighted");
}

TEST_CASE("an experiment produces per-run metrics and their arithmetic mean") {
    Corpus corpus = synth::make_corpus({2, 12, 9, 77});
    synth::Resources res(corpus);
    ExperimentOptions options = quick_options(res, 3, 999);

    EvalReport report = run_experiment(corpus, es_quake(ScenarioKind::MonolingualMultiDomain),
                                       Representation::Muse, res.view(), options);
    REQUIRE(report.runs.size() == 3);
    CHECK(report.rep == Representation::Muse);
    CHECK(report.spec.target_language == "es");
    CHECK(report.train_size > 0);
    CHECK(report.test_related > 0);
    CHECK(report.test_not_related > 0);
    CHECK(report.test_ids.size() ==
          static_cast<std::size_t>(report.test_related + report.test_not_related));
    CHECK_FALSE(report.test_hash.empty());

    // Per-run seeds derive from the master seed by run index.
    for (std::size_t r = 0; r < report.runs.size(); ++r)
        CHECK(report.runs[r].seed == derive_seed(999, r));

    // The averages are plain means of the per-run scores.
    double sp = 0, sm = 0, sw = 0;
    for (const RunMetrics& run : report.runs) {
        // Every run's stored scores agree with its stored counts.
        CHECK(run.f1_positive == f1_score(run.counts, F1Mode::Positive));
        CHECK(run.f1_macro == f1_score(run.counts, F1Mode::Macro));
        CHECK(run.f1_weighted == f1_score(run.counts, F1Mode::Weighted));
        sp += run.f1_positive;
        sm += run.f1_macro;
        sw += run.f1_weighted;
    }
    CHECK(report.averaged.f1_positive == doctest::Approx(sp / 3).epsilon(1e-12));
    CHECK(report.averaged.f1_macro == doctest::Approx(sm / 3).epsilon(1e-12));
    CHECK(report.averaged.f1_weighted == doctest::Approx(sw / 3).epsilon(1e-12));

    // Averages sit inside the per-run envelope.
    auto lo = [&](auto get) {
        double v = 1e9;
        for (const RunMetrics& run : report.runs) v = std::min(v, get(run));
        return v;
    };
    auto hi = [&](auto get) {
        double v = -1e9;
        for (const RunMetrics& run : report.runs) v = std::max(v, get(run));
        return v;
    };
    auto fp = [](const RunMetrics& r) { return r.f1_positive; };
    CHECK(report.averaged.f1_positive >= lo(fp));
    CHECK(report.averaged.f1_positive <= hi(fp));
}

TEST_CASE("experiments are reproducible and react to the seed") {
    Corpus corpus = synth::make_corpus({2, 10, 8, 11});
    synth::Resources res(corpus);
    ScenarioSpec spec = es_quake(ScenarioKind::CrossLingualMultiDomain);

    EvalReport a = run_experiment(corpus, spec, Representation::Muse, res.view(),
                                  quick_options(res, 2, 42));
    EvalReport b = run_experiment(corpus, spec, Representation::Muse, res.view(),
                                  quick_options(res, 2, 42));
    CHECK(a.test_hash == b.test_hash);
    REQUIRE(a.runs.size() == b.runs.size());
    for (std::size_t r = 0; r < a.runs.size(); ++r) {
        CHECK(a.runs[r].f1_positive == b.runs[r].f1_positive);
        CHECK(a.runs[r].counts.tp == b.runs[r].counts.tp);
        CHECK(a.runs[r].counts.fp == b.runs[r].counts.fp);
    }

    // A different seed reshuffles the augmentation pool, so the test set is a
    // deterministic function of the seed rather than a global constant.
    EvalReport c = run_experiment(corpus, spec, Representation::Muse, res.view(),
                                  quick_options(res, 2, 43));
    EvalReport d = run_experiment(corpus, spec, Representation::Muse, res.view(),
                                  quick_options(res, 2, 43));
    CHECK(c.test_hash == d.test_hash);
    CHECK(c.test_ids.size() == a.test_ids.size());
}

TEST_CASE("experiment failures carry the full cell context") {
    Corpus corpus = synth::make_corpus({2, 10, 8, 13});
    synth::Resources res(corpus);
    EmbeddingResources crippled = res.view();
    crippled.glove = nullptr;  // mt_glove becomes impossible

    try {
        run_experiment(corpus, es_quake(ScenarioKind::MonolingualMonodomain),
                       Representation::MtGlove, crippled, quick_options(res));
        FAIL("expected a stage-annotated failure");
    } catch (const std::runtime_error& e) {
        std::string what = e.what();
        CAPTURE(what);
        CHECK(what.find("scenario=monolingual_monodomain") != std::string::npos);
        CHECK(what.find("target=es/earthquake") != std::string::npos);
        CHECK(what.find("rep=mt_glove") != std::string::npos);
        CHECK(what.find("stage=") != std::string::npos);
    }

    ExperimentOptions bad = quick_options(res, 0);
    CHECK_THROWS_WITH_AS(
        run_experiment(corpus, es_quake(ScenarioKind::MonolingualMonodomain),
                       Representation::LF, res.view(), bad),
        doctest::Contains("repeats"), std::invalid_argument);
}

TEST_CASE("matrix aggregation enforces cell uniqueness and shared test sets") {
    MatrixCell a;
    a.kind = ScenarioKind::MonolingualMonodomain;
    a.target_language = "es";
    a.target_domain = "earthquake";
    a.rep = Representation::LF;
    a.report.test_hash = "abc";

    MatrixCell dup = a;
    CHECK_THROWS_WITH_AS(aggregate_matrix({a, dup}), doctest::Contains("duplicate"),
                         std::runtime_error);

    MatrixCell other_kind = a;
    other_kind.kind = ScenarioKind::MonolingualMultiDomain;
    other_kind.report.test_hash = "xyz";
    CHECK_THROWS_WITH_AS(aggregate_matrix({a, other_kind}),
                         doctest::Contains("test sets differ"), std::runtime_error);

    // Failed cells are exempt from the hash check; they have no test set.
    MatrixCell failed = a;
    failed.kind = ScenarioKind::MonolingualMultiDomain;
    failed.report = EvalReport{};
    failed.error = "stage=fit: boom";
    CHECK_NOTHROW(aggregate_matrix({a, failed}));
}

TEST_CASE("matrix aggregation orders cells canonically") {
    auto cell = [](ScenarioKind kind, const std::string& lang, Representation rep,
                   const std::string& hash) {
        MatrixCell c;
        c.kind = kind;
        c.target_language = lang;
        c.target_domain = "earthquake";
        c.rep = rep;
        c.report.test_hash = hash;
        return c;
    };
    std::vector<MatrixCell> cells = {
        cell(ScenarioKind::MultilingualMultiDomain, "it", Representation::Muse, "h2"),
        cell(ScenarioKind::MonolingualMonodomain, "it", Representation::LF, "h2"),
        cell(ScenarioKind::MonolingualMonodomain, "es", Representation::Muse, "h1"),
        cell(ScenarioKind::MonolingualMonodomain, "es", Representation::LF, "h1"),
    };
    RunMatrix m = aggregate_matrix(cells);
    REQUIRE(m.cells.size() == 4);
    CHECK(m.cells[0].target_language == "es");
    CHECK(m.cells[0].rep == Representation::LF);
    CHECK(m.cells[1].target_language == "es");
    CHECK(m.cells[1].rep == Representation::Muse);
    CHECK(m.cells[2].target_language == "it");
    CHECK(m.cells[3].kind == ScenarioKind::MultilingualMultiDomain);
}

TEST_CASE("the grid driver fills every feasible cell identically across workers") {
    Corpus corpus = synth::make_corpus({2, 11, 8, 19});
    synth::Resources res(corpus);

    MatrixOptions options;
    options.kinds = {ScenarioKind::MonolingualMonodomain,
                     ScenarioKind::CrossLingualMultiDomain};
    options.reps = {Representation::LF, Representation::Muse};
    options.targets = {{"es", "earthquake"}};
    options.repeats = 2;
    options.master_seed = 2024;
    options.forest.n_trees = 10;
    options.translator = &res.translator();

    RunMatrix one = run_matrix(corpus, res.view(), options);
    options.workers = 3;
    RunMatrix many = run_matrix(corpus, res.view(), options);

    REQUIRE(one.cells.size() == 4);  // 2 kinds x 2 reps x 1 target
    REQUIRE(many.cells.size() == one.cells.size());
    for (std::size_t i = 0; i < one.cells.size(); ++i) {
        CHECK(one.cells[i].error == many.cells[i].error);
        CHECK(one.cells[i].report.test_hash == many.cells[i].report.test_hash);
        CHECK(one.cells[i].report.averaged.f1_positive ==
              many.cells[i].report.averaged.f1_positive);
        CHECK(one.cells[i].report.averaged.f1_weighted ==
              many.cells[i].report.averaged.f1_weighted);
    }

    for (const MatrixCell& cell : one.cells) {
        CAPTURE(scenario_kind_name(cell.kind));
        CAPTURE(representation_name(cell.rep));
        CHECK(cell.error.empty());
        CHECK(cell.report.runs.size() == 2);
    }
}

TEST_CASE("the grid driver derives targets and skips impossible language pairs") {
    Corpus corpus = synth::make_corpus({1, 10, 8, 23});
    synth::Resources res(corpus);

    MatrixOptions options;
    options.kinds = {ScenarioKind::MonolingualMonodomain,
                     ScenarioKind::CrossLingualMonodomain};
    options.reps = {Representation::LF};
    options.repeats = 1;
    options.forest.n_trees = 5;
    options.translator = &res.translator();

    RunMatrix m = run_matrix(corpus, res.view(), options);
    // 9 derived targets (3 languages x 3 domains): all get the monolingual
    // kind, but cross-lingual cells exist only for non-English targets.
    int mono = 0, cross = 0;
    for (const MatrixCell& cell : m.cells) {
        if (cell.kind == ScenarioKind::MonolingualMonodomain) ++mono;
        if (cell.kind == ScenarioKind::CrossLingualMonodomain) {
            ++cross;
            CHECK(cell.target_language != "en");
        }
    }
    CHECK(mono == 9);
    CHECK(cross == 6);
}

TEST_CASE("cell failures land in the cell, not on the whole grid") {
    Corpus corpus = synth::make_corpus({2, 10, 8, 29});
    synth::Resources res(corpus);
    EmbeddingResources crippled = res.view();
    crippled.glove = nullptr;

    MatrixOptions options;
    options.kinds = {ScenarioKind::MonolingualMonodomain};
    options.reps = {Representation::LF, Representation::MtGlove};
    options.targets = {{"es", "earthquake"}};
    options.repeats = 1;
    options.forest.n_trees = 5;
    options.translator = &res.translator();

    RunMatrix m = run_matrix(corpus, crippled, options);
    REQUIRE(m.cells.size() == 2);
    CHECK(m.cells[0].error.empty());          // lf still works
    CHECK_FALSE(m.cells[1].error.empty());    // mt_glove cannot build
    CHECK(m.cells[1].error.find("stage=") != std::string::npos);
}

TEST_CASE("reports land on disk in all three shapes") {
    Corpus corpus = synth::make_corpus({2, 11, 8, 31});
    synth::Resources res(corpus);

    MatrixOptions options;
    options.kinds = {ScenarioKind::MonolingualMonodomain,
                     ScenarioKind::MonolingualMultiDomain};
    options.reps = {Representation::LF, Representation::Muse};
    options.targets = {{"es", "earthquake"}, {"it", "flood"}};
    options.repeats = 2;
    options.master_seed = 5;
    options.forest.n_trees = 8;
    options.translator = &res.translator();

    RunMatrix matrix = run_matrix(corpus, res.view(), options);
    std::string dir = synth::scratch_dir("evalx_reports");

    SUBCASE("delimited grids average the cells per kind and representation") {
        auto paths = emit_report(matrix, ReportFormat::Delimited, dir);
        REQUIRE(paths.size() == 3);
        Table grid = read_csv(dir + "/f1_grid_weighted.csv");
        REQUIRE(grid.header.size() == 3);  // scenario + 2 reps
        CHECK(grid.header[1] == "lf");
        CHECK(grid.header[2] == "muse");
        REQUIRE(grid.rows.size() == 2);
        CHECK(grid.rows[0][0] == "monolingual_monodomain");

        // Check one cell against a hand average over the two targets.
        double expect = 0.0;
        int found = 0;
        for (const MatrixCell& cell : matrix.cells)
            if (cell.kind == ScenarioKind::MonolingualMonodomain &&
                cell.rep == Representation::LF) {
                expect += cell.report.averaged.f1_weighted;
                ++found;
            }
        REQUIRE(found == 2);
        expect /= 2;
        CHECK(std::stod(grid.rows[0][1]) == doctest::Approx(expect).epsilon(1e-9));
    }

    SUBCASE("structured report carries every cell with run detail") {
        auto paths = emit_report(matrix, ReportFormat::Structured, dir);
        REQUIRE(paths.size() == 1);
        json j = json::parse(read_file(paths[0]));
        CHECK(j.at("schema_version") == 1);
        CHECK(j.at("cell_count") == matrix.cells.size());
        CHECK(j.at("failed_cell_count") == 0);
        REQUIRE(j.at("cells").size() == matrix.cells.size());
        const json& first = j.at("cells")[0];
        CHECK(first.contains("scenario"));
        CHECK(first.contains("representation"));
        CHECK(first.contains("runs"));
        CHECK(first.at("runs").size() == 2);
        CHECK(first.at("runs")[0].contains("f1_weighted"));
        CHECK(first.contains("test_hash"));
    }

    SUBCASE("plot data is one long-form file per target") {
        auto paths = emit_report(matrix, ReportFormat::PlotData, dir);
        REQUIRE(paths.size() == 2);
        std::set<std::string> names;
        for (const auto& p : paths)
            names.insert(std::filesystem::path(p).filename().string());
        CHECK(names.count("plot_es_earthquake.csv") == 1);
        CHECK(names.count("plot_it_flood.csv") == 1);
        Table t = read_csv(dir + "/plot_es_earthquake.csv");
        CHECK(t.header == std::vector<std::string>{"scenario", "representation",
                                                   "f1_positive", "f1_macro",
                                                   "f1_weighted"});
        CHECK(t.rows.size() == 4);  // 2 kinds x 2 reps for this target
    }
}
