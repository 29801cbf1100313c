#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "crisis/corpus.hpp"
#include "crisis/translate.hpp"

namespace crisis {

// The seven transfer settings. "Mono/Cross/Multi" qualify first the language
// axis (target language vs English pivot) and then the hazard-domain axis.
enum class ScenarioKind {
    MonolingualMonodomain,
    MonolingualCrossDomain,
    MonolingualMultiDomain,
    CrossLingualMonodomain,
    CrossLingualCrossDomain,
    CrossLingualMultiDomain,
    MultilingualMultiDomain,
};

constexpr ScenarioKind kAllScenarioKinds[] = {
    ScenarioKind::MonolingualMonodomain,  ScenarioKind::MonolingualCrossDomain,
    ScenarioKind::MonolingualMultiDomain, ScenarioKind::CrossLingualMonodomain,
    ScenarioKind::CrossLingualCrossDomain, ScenarioKind::CrossLingualMultiDomain,
    ScenarioKind::MultilingualMultiDomain,
};

std::string scenario_kind_name(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& name);  // throws on unknown

// True when the kind trains on pivot-language data (target must differ from
// the pivot).
bool uses_source_language(ScenarioKind kind);

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::MonolingualMonodomain;
    std::string target_language;
    std::string target_domain;  // hazard type
    std::string source_language = "en";
    uint64_t seed = 0;
};

struct LabeledId {
    std::string dataset;
    std::string id;
    LabelClass label = LabelClass::Related;

    bool operator==(const LabeledId&) const = default;
};

enum class TestOrigin { Native, PoolNegative, TranslatedNegative };
std::string origin_name(TestOrigin origin);
TestOrigin parse_origin(const std::string& name);

struct AugmentationEntry {
    std::string dataset;
    std::string id;
    TestOrigin origin = TestOrigin::Native;

    bool operator==(const AugmentationEntry&) const = default;
};

struct EventSplit {
    std::vector<std::string> train_events;  // sorted
    std::vector<std::string> test_events;   // sorted
};

struct ScenarioDataset {
    ScenarioSpec spec;
    std::vector<LabeledId> train;  // balanced, may repeat oversampled ids
    std::vector<LabeledId> test;   // native order, then augmented entries
    std::vector<std::string> train_events;  // sorted
    std::vector<std::string> test_events;   // sorted
    std::vector<AugmentationEntry> augmentation_log;  // one entry per test row
    int augmentation_shortfall = 0;  // negatives still missing at the ratio
};

// Ranks the target-language/domain events by
// score = instance_count * (1 - |pos_ratio - 0.5| * 2)
// (instances counted over target-language messages), keeps the top half
// eligible for training and holds the rest out for testing. A single target
// event goes entirely to test.
EventSplit select_events(const Corpus& corpus, const ScenarioSpec& spec);

struct ScenarioBuildOptions {
    double test_negative_ratio = 0.5;  // in (0, 0.5]
    bool balance = true;
    bool augment = true;
    TranslationClient* translator = nullptr;  // enables translated negatives
    // Events excluded from training beyond the target's own held-out set
    // (grid runs hold out every target's test events everywhere).
    const std::set<std::string>* holdout_events = nullptr;
    // Replaces the default augmentation pool (grid runs share one pool).
    const std::vector<Message>* negative_pool = nullptr;
};

ScenarioDataset build_scenario(const Corpus& corpus, const ScenarioSpec& spec,
                               const ScenarioBuildOptions& options = {});

// Equalizes class counts at floor((P+N)/2): the larger class is subsampled
// without replacement, the smaller kept whole and oversampled with
// replacement. Deterministic for a fixed seed.
std::vector<LabeledId> balance_training_set(const std::vector<LabeledId>& train,
                                            uint64_t seed);

struct AugmentationResult {
    std::vector<LabeledId> test;
    std::vector<AugmentationEntry> log;
    int shortfall = 0;
};

// Adds pool negatives until the NotRelated share reaches target_ratio.
// Same-language pool entries are drawn first; pivot-language entries are
// marked for translation and used only when a translator is available.
// Best effort: an exhausted pool is reported, not an error.
AugmentationResult augment_test_negatives(const std::vector<LabeledId>& test,
                                          const std::vector<Message>& pool,
                                          const std::string& target_language,
                                          const std::string& source_language,
                                          bool translator_available,
                                          double target_ratio, uint64_t seed);

// Manifests pin the corpus content hash; import refuses a different corpus.
void export_manifest(const ScenarioDataset& dataset, const Corpus& corpus,
                     const std::string& path);
ScenarioDataset import_manifest(const std::string& path, const Corpus& corpus);

// Resolves ids back to corpus messages (order preserved).
std::vector<Message> materialize_messages(const Corpus& corpus,
                                          const std::vector<LabeledId>& ids);

// Test materialization applies the augmentation log: translated negatives
// get target-language text from the translator and keep their English text
// as the stored translation.
std::vector<Message> materialize_test(const Corpus& corpus,
                                      const ScenarioDataset& dataset,
                                      TranslationClient* translator);

}  // namespace crisis
