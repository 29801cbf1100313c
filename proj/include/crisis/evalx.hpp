#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crisis/corpus.hpp"
#include "crisis/embed.hpp"
#include "crisis/forest.hpp"
#include "crisis/scenario.hpp"

namespace crisis {

struct ConfusionCounts {
    long long tp = 0;  // Related is the positive class
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;
};

// Lengths must match and be non-empty.
ConfusionCounts confusion_counts(const std::vector<LabelClass>& predicted,
                                 const std::vector<LabelClass>& actual);

enum class F1Mode { Positive, Macro, Weighted };
std::string f1_mode_name(F1Mode mode);

// Zero-denominator per-class F1 is 0 by convention.
double f1_score(const ConfusionCounts& c, F1Mode mode);

struct RunMetrics {
    uint64_t seed = 0;
    ConfusionCounts counts;
    double f1_positive = 0.0;
    double f1_macro = 0.0;
    double f1_weighted = 0.0;
};

struct MetricTrio {
    double f1_positive = 0.0;
    double f1_macro = 0.0;
    double f1_weighted = 0.0;
};

struct EvalReport {
    ScenarioSpec spec;
    Representation rep = Representation::LF;
    std::vector<RunMetrics> runs;
    MetricTrio averaged;

    // Test-set bookkeeping for cross-scenario comparability checks.
    std::vector<std::string> test_ids;  // "dataset/id" in test order
    std::string test_hash;
    int test_related = 0;
    int test_not_related = 0;
    int augmentation_shortfall = 0;
    int train_size = 0;  // balanced size of the first run
};

struct ExperimentOptions {
    int repeats = 5;
    uint64_t master_seed = 0;
    ForestParams forest;  // per-run seed derived from the master seed
    ScenarioBuildOptions scenario;
    int workers = 1;
};

// Builds the scenario once (fixed augmented test set), then per run r:
// rebalance the training pool, refit the forest (both seeded from
// derive(master_seed, r)), predict, score. Averages are arithmetic means.
EvalReport run_experiment(const Corpus& corpus, const ScenarioSpec& spec,
                          Representation rep, const EmbeddingResources& resources,
                          const ExperimentOptions& options);

struct MatrixCell {
    ScenarioKind kind = ScenarioKind::MonolingualMonodomain;
    std::string target_language;
    std::string target_domain;
    Representation rep = Representation::LF;
    EvalReport report;
    std::string error;  // non-empty when the cell failed
};

struct RunMatrix {
    std::vector<MatrixCell> cells;
};

// Validates cell uniqueness and per-target test identity, then orders cells
// canonically (kind, language, domain, representation).
RunMatrix aggregate_matrix(const std::vector<MatrixCell>& cells);

struct MatrixOptions {
    std::vector<ScenarioKind> kinds;          // empty = all seven
    std::vector<Representation> reps;         // empty = all seven
    std::vector<std::pair<std::string, std::string>> targets;  // empty = derive
    std::string source_language = "en";
    int repeats = 5;
    uint64_t master_seed = 0;
    double test_negative_ratio = 0.5;
    ForestParams forest;
    TranslationClient* translator = nullptr;
    int workers = 1;
};

// Full grid driver: one shared holdout (the union of every target's test
// events) is excluded from all training; the augmentation pool is the
// negative part of that holdout. Cell failures land in MatrixCell::error.
RunMatrix run_matrix(const Corpus& corpus, const EmbeddingResources& resources,
                     const MatrixOptions& options);

enum class ReportFormat { Delimited, Structured, PlotData };

// Writes report files under out_dir and returns their paths.
// Delimited: per-mode scenario x representation grids of averaged F1, cells
// averaged over targets. Structured: full per-run detail. PlotData: per
// target, long-form rows for plotting.
std::vector<std::string> emit_report(const RunMatrix& matrix, ReportFormat format,
                                     const std::string& out_dir);

}  // namespace crisis
