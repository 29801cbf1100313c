#include "crisis/evalx.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "crisis/common.hpp"
#include "crisis/io.hpp"

namespace crisis {

namespace {

const uint64_t kBalanceSalt = fnv1a64("balance");
const uint64_t kForestSalt = fnv1a64("forest");

std::string cell_context(const ScenarioSpec& spec, Representation rep) {
    return concat("scenario=", scenario_kind_name(spec.kind), " target=",
                  spec.target_language, "/", spec.target_domain,
                  " rep=", representation_name(rep));
}

[[noreturn]] void fail_stage(const std::string& context, const std::string& stage,
                             const std::exception& cause) {
    throw std::runtime_error(concat(context, " stage=", stage, ": ", cause.what()));
}

std::vector<LabelClass> labels_of(const std::vector<LabeledId>& ids) {
    std::vector<LabelClass> out;
    out.reserve(ids.size());
    for (const auto& m : ids) out.push_back(m.label);
    return out;
}

// Content key for "same test set" checks across scenario kinds.
std::string hash_test_set(const std::vector<LabeledId>& test) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto& m : test) {
        h = fnv1a64(m.dataset, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(m.id, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(label_name(m.label), h);
        h = fnv1a64("\n", h);
    }
    return hex64(h);
}

int rep_order(Representation rep) {
    for (int i = 0; i < static_cast<int>(std::size(kAllRepresentations)); ++i)
        if (kAllRepresentations[i] == rep) return i;
    return static_cast<int>(std::size(kAllRepresentations));
}

std::string target_key(const std::string& language, const std::string& domain) {
    return concat(language, "/", domain);
}

}  // namespace

ConfusionCounts confusion_counts(const std::vector<LabelClass>& predicted,
                                 const std::vector<LabelClass>& actual) {
    if (predicted.size() != actual.size())
        throw std::invalid_argument(concat("prediction/label length mismatch: ",
                                           predicted.size(), " vs ", actual.size()));
    if (predicted.empty())
        throw std::invalid_argument("cannot score an empty prediction list");
    ConfusionCounts c;
    for (size_t i = 0; i < predicted.size(); ++i) {
        bool pred_pos = predicted[i] == LabelClass::Related;
        bool is_pos = actual[i] == LabelClass::Related;
        if (pred_pos && is_pos) ++c.tp;
        else if (pred_pos && !is_pos) ++c.fp;
        else if (!pred_pos && is_pos) ++c.fn;
        else ++c.tn;
    }
    return c;
}

std::string f1_mode_name(F1Mode mode) {
    switch (mode) {
        case F1Mode::Positive: return "positive";
        case F1Mode::Macro: return "macro";
        case F1Mode::Weighted: return "weighted";
    }
    throw std::logic_error("unreachable f1 mode");
}

double f1_score(const ConfusionCounts& c, F1Mode mode) {
    auto safe = [](double num, double den) { return den == 0.0 ? 0.0 : num / den; };
    double f1_pos = safe(2.0 * c.tp, 2.0 * c.tp + c.fp + c.fn);
    double f1_neg = safe(2.0 * c.tn, 2.0 * c.tn + c.fn + c.fp);
    switch (mode) {
        case F1Mode::Positive:
            return f1_pos;
        case F1Mode::Macro:
            return (f1_pos + f1_neg) / 2.0;
        case F1Mode::Weighted: {
            double support_pos = static_cast<double>(c.tp + c.fn);
            double support_neg = static_cast<double>(c.tn + c.fp);
            return safe(support_pos * f1_pos + support_neg * f1_neg,
                        support_pos + support_neg);
        }
    }
    throw std::logic_error("unreachable f1 mode");
}

EvalReport run_experiment(const Corpus& corpus, const ScenarioSpec& spec,
                          Representation rep, const EmbeddingResources& resources,
                          const ExperimentOptions& options) {
    if (options.repeats < 1)
        throw std::invalid_argument("repeats must be at least 1");

    ScenarioSpec pinned = spec;
    pinned.seed = options.master_seed;
    const std::string context = cell_context(pinned, rep);

    // One fixed test set; only training resampling varies across runs.
    ScenarioBuildOptions build = options.scenario;
    build.balance = false;
    ScenarioDataset ds;
    try {
        ds = build_scenario(corpus, pinned, build);
    } catch (const std::exception& e) {
        fail_stage(context, "scenario", e);
    }

    EvalReport report;
    report.spec = pinned;
    report.rep = rep;
    report.test_hash = hash_test_set(ds.test);
    report.augmentation_shortfall = ds.augmentation_shortfall;
    for (const auto& m : ds.test) {
        report.test_ids.push_back(concat(m.dataset, "/", m.id));
        if (m.label == LabelClass::Related) ++report.test_related;
        else ++report.test_not_related;
    }

    FeatureMatrix test_x;
    std::vector<LabelClass> test_y = labels_of(ds.test);
    try {
        auto test_messages = materialize_test(corpus, ds, options.scenario.translator);
        test_x = build_representation(test_messages, rep, resources);
    } catch (const std::exception& e) {
        fail_stage(context, "test-features", e);
    }

    double sum_pos = 0.0, sum_macro = 0.0, sum_weighted = 0.0;
    for (int r = 0; r < options.repeats; ++r) {
        uint64_t seed_r = derive_seed(options.master_seed, static_cast<uint64_t>(r));
        std::vector<LabeledId> balanced;
        try {
            balanced = balance_training_set(ds.train, derive_seed(seed_r, kBalanceSalt));
        } catch (const std::exception& e) {
            fail_stage(context, concat("balance(run ", r, ")"), e);
        }
        if (r == 0) report.train_size = static_cast<int>(balanced.size());

        FeatureMatrix train_x;
        try {
            auto train_messages = materialize_messages(corpus, balanced);
            train_x = build_representation(train_messages, rep, resources);
        } catch (const std::exception& e) {
            fail_stage(context, concat("train-features(run ", r, ")"), e);
        }

        RandomForestModel model;
        try {
            ForestParams params = options.forest;
            params.seed = derive_seed(seed_r, kForestSalt);
            model = fit_forest(train_x, labels_of(balanced), params, options.workers);
        } catch (const std::exception& e) {
            fail_stage(context, concat("fit(run ", r, ")"), e);
        }

        RunMetrics run;
        run.seed = seed_r;
        try {
            run.counts = confusion_counts(predict(model, test_x.values), test_y);
        } catch (const std::exception& e) {
            fail_stage(context, concat("predict(run ", r, ")"), e);
        }
        run.f1_positive = f1_score(run.counts, F1Mode::Positive);
        run.f1_macro = f1_score(run.counts, F1Mode::Macro);
        run.f1_weighted = f1_score(run.counts, F1Mode::Weighted);
        sum_pos += run.f1_positive;
        sum_macro += run.f1_macro;
        sum_weighted += run.f1_weighted;
        report.runs.push_back(run);
    }

    double n = static_cast<double>(options.repeats);
    report.averaged.f1_positive = sum_pos / n;
    report.averaged.f1_macro = sum_macro / n;
    report.averaged.f1_weighted = sum_weighted / n;
    return report;
}

RunMatrix aggregate_matrix(const std::vector<MatrixCell>& cells) {
    RunMatrix matrix;
    matrix.cells = cells;

    std::set<std::tuple<int, std::string, std::string, int>> seen;
    for (const auto& cell : matrix.cells) {
        auto key = std::make_tuple(static_cast<int>(cell.kind), cell.target_language,
                                   cell.target_domain, rep_order(cell.rep));
        if (!seen.insert(key).second)
            throw std::runtime_error(concat(
                "duplicate matrix cell: ", scenario_kind_name(cell.kind), " ",
                target_key(cell.target_language, cell.target_domain), " ",
                representation_name(cell.rep)));
    }

    // Every kind and representation evaluated against one target must score
    // the exact same test rows, otherwise the grid compares nothing.
    std::map<std::string, std::string> hashes;
    for (const auto& cell : matrix.cells) {
        if (!cell.error.empty()) continue;
        std::string key = target_key(cell.target_language, cell.target_domain);
        auto [it, inserted] = hashes.emplace(key, cell.report.test_hash);
        if (!inserted && it->second != cell.report.test_hash)
            throw std::runtime_error(
                concat("test sets differ across scenarios for target ", key));
    }

    std::sort(matrix.cells.begin(), matrix.cells.end(),
              [](const MatrixCell& a, const MatrixCell& b) {
                  auto ka = std::make_tuple(static_cast<int>(a.kind), a.target_language,
                                            a.target_domain, rep_order(a.rep));
                  auto kb = std::make_tuple(static_cast<int>(b.kind), b.target_language,
                                            b.target_domain, rep_order(b.rep));
                  return ka < kb;
              });
    return matrix;
}

RunMatrix run_matrix(const Corpus& corpus, const EmbeddingResources& resources,
                     const MatrixOptions& options) {
    std::vector<ScenarioKind> kinds = options.kinds;
    if (kinds.empty())
        kinds.assign(std::begin(kAllScenarioKinds), std::end(kAllScenarioKinds));
    std::vector<Representation> reps = options.reps;
    if (reps.empty())
        reps.assign(std::begin(kAllRepresentations), std::end(kAllRepresentations));

    std::vector<std::pair<std::string, std::string>> targets = options.targets;
    if (targets.empty()) {
        std::set<std::pair<std::string, std::string>> found;
        for (const auto& m : corpus.messages()) {
            const Event* e = corpus.find_event(m.event_id);
            if (!e || m.language.empty()) continue;
            found.emplace(m.language, e->hazard_type);
        }
        targets.assign(found.begin(), found.end());
    }
    if (targets.empty()) throw std::runtime_error("corpus yields no evaluation targets");

    // The union of every target's held-out events is excluded from all
    // training sets, so no cell trains on rows another cell tests on.
    std::set<std::string> holdout;
    for (const auto& [language, domain] : targets) {
        ScenarioSpec probe;
        probe.kind = ScenarioKind::MonolingualMultiDomain;  // split ignores kind
        probe.target_language = language;
        probe.target_domain = domain;
        probe.source_language = options.source_language;
        probe.seed = options.master_seed;
        EventSplit split = select_events(corpus, probe);
        holdout.insert(split.test_events.begin(), split.test_events.end());
    }

    std::vector<Message> pool;
    for (const auto& m : corpus.messages())
        if (m.label == LabelClass::NotRelated && holdout.count(m.event_id))
            pool.push_back(m);

    std::vector<MatrixCell> cells;
    for (const auto& [language, domain] : targets) {
        for (ScenarioKind kind : kinds) {
            if (uses_source_language(kind) && language == options.source_language)
                continue;
            for (Representation rep : reps) {
                MatrixCell cell;
                cell.kind = kind;
                cell.target_language = language;
                cell.target_domain = domain;
                cell.rep = rep;
                cells.push_back(std::move(cell));
            }
        }
    }

    ExperimentOptions base;
    base.repeats = options.repeats;
    base.master_seed = options.master_seed;
    base.forest = options.forest;
    base.scenario.test_negative_ratio = options.test_negative_ratio;
    base.scenario.augment = true;
    base.scenario.translator = options.translator;
    base.scenario.holdout_events = &holdout;
    base.scenario.negative_pool = &pool;
    base.workers = 1;  // parallelism lives at the cell level

    auto run_cell = [&](MatrixCell& cell) {
        ScenarioSpec spec;
        spec.kind = cell.kind;
        spec.target_language = cell.target_language;
        spec.target_domain = cell.target_domain;
        spec.source_language = options.source_language;
        spec.seed = options.master_seed;
        try {
            cell.report = run_experiment(corpus, spec, cell.rep, resources, base);
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    };

    int workers = std::max(1, options.workers);
    if (workers == 1 || cells.size() <= 1) {
        for (auto& cell : cells) run_cell(cell);
    } else {
        std::atomic<size_t> next{0};
        auto drain = [&]() {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                run_cell(cells[i]);
            }
        };
        std::vector<std::thread> threads;
        int n = std::min<int>(workers, static_cast<int>(cells.size()));
        threads.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) threads.emplace_back(drain);
        for (auto& t : threads) t.join();
    }

    return aggregate_matrix(cells);
}

namespace {

json cell_to_json(const MatrixCell& cell) {
    json j;
    j["scenario"] = scenario_kind_name(cell.kind);
    j["target_language"] = cell.target_language;
    j["target_domain"] = cell.target_domain;
    j["representation"] = representation_name(cell.rep);
    if (!cell.error.empty()) {
        j["error"] = cell.error;
        return j;
    }
    const EvalReport& r = cell.report;
    j["averaged"] = {{"f1_positive", r.averaged.f1_positive},
                     {"f1_macro", r.averaged.f1_macro},
                     {"f1_weighted", r.averaged.f1_weighted}};
    json runs = json::array();
    for (const auto& run : r.runs) {
        runs.push_back({{"seed", run.seed},
                        {"tp", run.counts.tp},
                        {"fp", run.counts.fp},
                        {"tn", run.counts.tn},
                        {"fn", run.counts.fn},
                        {"f1_positive", run.f1_positive},
                        {"f1_macro", run.f1_macro},
                        {"f1_weighted", run.f1_weighted}});
    }
    j["runs"] = std::move(runs);
    j["test_size"] = r.test_related + r.test_not_related;
    j["test_related"] = r.test_related;
    j["test_not_related"] = r.test_not_related;
    j["test_hash"] = r.test_hash;
    j["augmentation_shortfall"] = r.augmentation_shortfall;
    j["train_size"] = r.train_size;
    return j;
}

double metric_of(const MetricTrio& trio, F1Mode mode) {
    switch (mode) {
        case F1Mode::Positive: return trio.f1_positive;
        case F1Mode::Macro: return trio.f1_macro;
        case F1Mode::Weighted: return trio.f1_weighted;
    }
    throw std::logic_error("unreachable f1 mode");
}

std::vector<ScenarioKind> kinds_in(const RunMatrix& matrix) {
    std::set<int> present;
    for (const auto& cell : matrix.cells) present.insert(static_cast<int>(cell.kind));
    std::vector<ScenarioKind> out;
    for (ScenarioKind kind : kAllScenarioKinds)
        if (present.count(static_cast<int>(kind))) out.push_back(kind);
    return out;
}

std::vector<Representation> reps_in(const RunMatrix& matrix) {
    std::set<int> present;
    for (const auto& cell : matrix.cells) present.insert(rep_order(cell.rep));
    std::vector<Representation> out;
    for (Representation rep : kAllRepresentations)
        if (present.count(rep_order(rep))) out.push_back(rep);
    return out;
}

std::string write_grid_csv(const RunMatrix& matrix, F1Mode mode,
                           const std::filesystem::path& out_dir) {
    auto kinds = kinds_in(matrix);
    auto reps = reps_in(matrix);

    // scenario x representation averages, pooled over targets.
    std::map<std::pair<int, int>, std::pair<double, int>> sums;
    for (const auto& cell : matrix.cells) {
        if (!cell.error.empty()) continue;
        auto& slot = sums[{static_cast<int>(cell.kind), rep_order(cell.rep)}];
        slot.first += metric_of(cell.report.averaged, mode);
        slot.second += 1;
    }

    Table t;
    t.header.push_back("scenario");
    for (Representation rep : reps) t.header.push_back(representation_name(rep));
    for (ScenarioKind kind : kinds) {
        std::vector<std::string> row{scenario_kind_name(kind)};
        for (Representation rep : reps) {
            auto it = sums.find({static_cast<int>(kind), rep_order(rep)});
            if (it == sums.end() || it->second.second == 0)
                row.push_back("");
            else
                row.push_back(format_double(it->second.first / it->second.second));
        }
        t.rows.push_back(std::move(row));
    }

    auto path = out_dir / concat("f1_grid_", f1_mode_name(mode), ".csv");
    write_csv(path.string(), t);
    return path.string();
}

}  // namespace

std::vector<std::string> emit_report(const RunMatrix& matrix, ReportFormat format,
                                     const std::string& out_dir) {
    std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;

    switch (format) {
        case ReportFormat::Delimited: {
            for (F1Mode mode : {F1Mode::Positive, F1Mode::Macro, F1Mode::Weighted})
                written.push_back(write_grid_csv(matrix, mode, dir));
            break;
        }
        case ReportFormat::Structured: {
            json j;
            j["schema_version"] = 1;
            size_t failed = 0;
            json cells = json::array();
            for (const auto& cell : matrix.cells) {
                if (!cell.error.empty()) ++failed;
                cells.push_back(cell_to_json(cell));
            }
            j["cell_count"] = matrix.cells.size();
            j["failed_cell_count"] = failed;
            j["cells"] = std::move(cells);
            auto path = dir / "report.json";
            write_file(path.string(), j.dump(2) + "\n");
            written.push_back(path.string());
            break;
        }
        case ReportFormat::PlotData: {
            std::map<std::pair<std::string, std::string>, Table> tables;
            for (const auto& cell : matrix.cells) {
                if (!cell.error.empty()) continue;
                auto& t = tables[{cell.target_language, cell.target_domain}];
                if (t.header.empty())
                    t.header = {"scenario", "representation", "f1_positive",
                                "f1_macro", "f1_weighted"};
                t.rows.push_back({scenario_kind_name(cell.kind),
                                  representation_name(cell.rep),
                                  format_double(cell.report.averaged.f1_positive),
                                  format_double(cell.report.averaged.f1_macro),
                                  format_double(cell.report.averaged.f1_weighted)});
            }
            for (const auto& [key, table] : tables) {
                auto path = dir / concat("plot_", key.first, "_", key.second, ".csv");
                write_csv(path.string(), table);
                written.push_back(path.string());
            }
            break;
        }
    }
    return written;
}

}  // namespace crisis
