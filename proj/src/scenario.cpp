#include "crisis/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "crisis/common.hpp"
#include "crisis/io.hpp"

namespace crisis {

std::string scenario_kind_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::MonolingualMonodomain: return "monolingual_monodomain";
        case ScenarioKind::MonolingualCrossDomain: return "monolingual_crossdomain";
        case ScenarioKind::MonolingualMultiDomain: return "monolingual_multidomain";
        case ScenarioKind::CrossLingualMonodomain: return "cross_lingual_monodomain";
        case ScenarioKind::CrossLingualCrossDomain: return "cross_lingual_crossdomain";
        case ScenarioKind::CrossLingualMultiDomain: return "cross_lingual_multidomain";
        case ScenarioKind::MultilingualMultiDomain: return "multilingual_multidomain";
    }
    throw std::logic_error("unreachable scenario kind");
}

ScenarioKind parse_scenario_kind(const std::string& name) {
    for (ScenarioKind kind : kAllScenarioKinds) {
        if (scenario_kind_name(kind) == name) return kind;
    }
    throw std::invalid_argument(concat("unknown scenario kind: ", name));
}

bool uses_source_language(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::CrossLingualMonodomain:
        case ScenarioKind::CrossLingualCrossDomain:
        case ScenarioKind::CrossLingualMultiDomain:
        case ScenarioKind::MultilingualMultiDomain:
            return true;
        default:
            return false;
    }
}

std::string origin_name(TestOrigin origin) {
    switch (origin) {
        case TestOrigin::Native: return "native";
        case TestOrigin::PoolNegative: return "pool_negative";
        case TestOrigin::TranslatedNegative: return "translated_negative";
    }
    throw std::logic_error("unreachable test origin");
}

TestOrigin parse_origin(const std::string& name) {
    if (name == "native") return TestOrigin::Native;
    if (name == "pool_negative") return TestOrigin::PoolNegative;
    if (name == "translated_negative") return TestOrigin::TranslatedNegative;
    throw std::invalid_argument(concat("unknown test origin: ", name));
}

namespace {

void check_spec(const ScenarioSpec& spec) {
    if (spec.target_language.empty()) {
        throw std::invalid_argument("scenario needs a target language");
    }
    if (spec.target_domain.empty()) {
        throw std::invalid_argument("scenario needs a target domain");
    }
    if (uses_source_language(spec.kind) &&
        spec.target_language == spec.source_language) {
        throw std::invalid_argument(
            concat("scenario kind ", scenario_kind_name(spec.kind),
                   " requires a target language different from the source language"));
    }
}

struct EventStats {
    const Event* event = nullptr;
    int target_count = 0;    // messages in the target language
    int target_related = 0;  // of which Related
    bool has_target_lang = false;
    bool has_source_lang = false;
};

std::map<std::string, EventStats> collect_stats(const Corpus& corpus,
                                                const ScenarioSpec& spec) {
    std::map<std::string, EventStats> stats;
    for (const Event& e : corpus.events()) {
        stats[e.id].event = &e;
    }
    for (const Message& m : corpus.messages()) {
        EventStats& s = stats[m.event_id];
        if (m.language == spec.target_language) {
            s.has_target_lang = true;
            ++s.target_count;
            if (m.label == LabelClass::Related) ++s.target_related;
        }
        if (m.language == spec.source_language) s.has_source_lang = true;
    }
    return stats;
}

}  // namespace

EventSplit select_events(const Corpus& corpus, const ScenarioSpec& spec) {
    check_spec(spec);
    std::map<std::string, EventStats> stats = collect_stats(corpus, spec);

    // Rank the target-language events of the target domain.
    struct Ranked {
        std::string id;
        int count;
        double score;
    };
    std::vector<Ranked> ranked;
    for (const auto& [id, s] : stats) {
        if (s.event == nullptr || !s.has_target_lang) continue;
        if (s.event->hazard_type != spec.target_domain) continue;
        double pos_ratio =
            static_cast<double>(s.target_related) / static_cast<double>(s.target_count);
        double score = s.target_count * (1.0 - std::abs(pos_ratio - 0.5) * 2.0);
        ranked.push_back({id, s.target_count, score});
    }
    if (ranked.empty()) {
        throw std::runtime_error("target has no held-out event");
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.count != b.count) return a.count > b.count;
        return a.id < b.id;
    });

    std::set<std::string> target_train;
    std::set<std::string> test_events;
    if (ranked.size() == 1) {
        test_events.insert(ranked[0].id);
    } else {
        std::size_t train_n = (ranked.size() + 1) / 2;
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            (i < train_n ? target_train : test_events).insert(ranked[i].id);
        }
    }

    // Expand training eligibility per kind; held-out events never train.
    std::set<std::string> train_events;
    for (const auto& [id, s] : stats) {
        if (s.event == nullptr || test_events.count(id) != 0) continue;
        bool same_domain = s.event->hazard_type == spec.target_domain;
        bool eligible = false;
        switch (spec.kind) {
            case ScenarioKind::MonolingualMonodomain:
                eligible = target_train.count(id) != 0;
                break;
            case ScenarioKind::MonolingualCrossDomain:
                eligible = s.has_target_lang && !same_domain;
                break;
            case ScenarioKind::MonolingualMultiDomain:
                eligible = s.has_target_lang;
                break;
            case ScenarioKind::CrossLingualMonodomain:
                eligible = s.has_source_lang && same_domain;
                break;
            case ScenarioKind::CrossLingualCrossDomain:
                eligible = s.has_source_lang && !same_domain;
                break;
            case ScenarioKind::CrossLingualMultiDomain:
                eligible = s.has_source_lang;
                break;
            case ScenarioKind::MultilingualMultiDomain:
                eligible = s.has_source_lang || s.has_target_lang;
                break;
        }
        if (eligible) train_events.insert(id);
    }

    EventSplit split;
    split.train_events.assign(train_events.begin(), train_events.end());
    split.test_events.assign(test_events.begin(), test_events.end());
    return split;
}

std::vector<LabeledId> balance_training_set(const std::vector<LabeledId>& train,
                                            uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < train.size(); ++i) {
        (train[i].label == LabelClass::Related ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty()) {
        throw std::runtime_error("cannot balance a training set with an empty class");
    }
    const std::size_t target = (pos.size() + neg.size()) / 2;
    Rng rng(seed);

    auto subsample = [&](const std::vector<std::size_t>& cls) {
        std::vector<std::size_t> picked = cls;
        rng.shuffle(picked);
        picked.resize(target);
        std::sort(picked.begin(), picked.end());
        return picked;
    };
    auto oversample_extras = [&](const std::vector<std::size_t>& cls) {
        std::vector<std::size_t> extras;
        for (std::size_t need = target - cls.size(); need > 0; --need) {
            extras.push_back(cls[rng.uniform_below(cls.size())]);
        }
        return extras;
    };

    std::vector<std::size_t> kept;
    std::vector<std::size_t> extras;
    for (const std::vector<std::size_t>* cls : {&pos, &neg}) {
        if (cls->size() > target) {
            std::vector<std::size_t> sub = subsample(*cls);
            kept.insert(kept.end(), sub.begin(), sub.end());
        } else {
            kept.insert(kept.end(), cls->begin(), cls->end());
            if (cls->size() < target) {
                std::vector<std::size_t> extra = oversample_extras(*cls);
                extras.insert(extras.end(), extra.begin(), extra.end());
            }
        }
    }
    std::sort(kept.begin(), kept.end());

    std::vector<LabeledId> out;
    out.reserve(kept.size() + extras.size());
    for (std::size_t i : kept) out.push_back(train[i]);
    for (std::size_t i : extras) out.push_back(train[i]);
    return out;
}

AugmentationResult augment_test_negatives(const std::vector<LabeledId>& test,
                                          const std::vector<Message>& pool,
                                          const std::string& target_language,
                                          const std::string& source_language,
                                          bool translator_available,
                                          double target_ratio, uint64_t seed) {
    if (!(target_ratio > 0.0 && target_ratio <= 0.5)) {
        throw std::invalid_argument("target_ratio must be in (0, 0.5]");
    }

    AugmentationResult result;
    result.test = test;
    std::set<std::pair<std::string, std::string>> present;
    std::size_t negatives = 0;
    for (const LabeledId& t : test) {
        present.insert({t.dataset, t.id});
        result.log.push_back({t.dataset, t.id, TestOrigin::Native});
        if (t.label == LabelClass::NotRelated) ++negatives;
    }

    // Smallest k with (negatives + k) >= target_ratio * (size + k).
    double size = static_cast<double>(test.size());
    double raw = (target_ratio * size - static_cast<double>(negatives)) /
                 (1.0 - target_ratio);
    long long needed = raw <= 0.0 ? 0 : static_cast<long long>(std::ceil(raw - 1e-9));
    while (static_cast<double>(negatives) + static_cast<double>(needed) <
           target_ratio * (size + static_cast<double>(needed))) {
        ++needed;
    }

    Rng rng(seed);
    auto draw_from = [&](const std::string& language, TestOrigin origin) {
        if (needed <= 0) return;
        std::vector<const Message*> candidates;
        for (const Message& m : pool) {
            if (m.language != language) continue;
            if (m.label != LabelClass::NotRelated) continue;
            if (present.count({m.source_dataset, m.id}) != 0) continue;
            candidates.push_back(&m);
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const Message* a, const Message* b) {
                      if (a->source_dataset != b->source_dataset)
                          return a->source_dataset < b->source_dataset;
                      return a->id < b->id;
                  });
        rng.shuffle(candidates);
        for (const Message* m : candidates) {
            if (needed <= 0) break;
            result.test.push_back({m->source_dataset, m->id, LabelClass::NotRelated});
            result.log.push_back({m->source_dataset, m->id, origin});
            present.insert({m->source_dataset, m->id});
            --needed;
        }
    };

    draw_from(target_language, TestOrigin::PoolNegative);
    if (translator_available && source_language != target_language) {
        draw_from(source_language, TestOrigin::TranslatedNegative);
    }
    result.shortfall = static_cast<int>(needed);
    return result;
}

ScenarioDataset build_scenario(const Corpus& corpus, const ScenarioSpec& spec,
                               const ScenarioBuildOptions& options) {
    check_spec(spec);
    EventSplit split = select_events(corpus, spec);

    std::set<std::string> test_set(split.test_events.begin(), split.test_events.end());
    std::set<std::string> train_set(split.train_events.begin(),
                                    split.train_events.end());
    if (options.holdout_events != nullptr) {
        for (const std::string& id : *options.holdout_events) train_set.erase(id);
    }

    std::set<std::string> train_languages;
    switch (spec.kind) {
        case ScenarioKind::MonolingualMonodomain:
        case ScenarioKind::MonolingualCrossDomain:
        case ScenarioKind::MonolingualMultiDomain:
            train_languages = {spec.target_language};
            break;
        case ScenarioKind::CrossLingualMonodomain:
        case ScenarioKind::CrossLingualCrossDomain:
        case ScenarioKind::CrossLingualMultiDomain:
            train_languages = {spec.source_language};
            break;
        case ScenarioKind::MultilingualMultiDomain:
            train_languages = {spec.source_language, spec.target_language};
            break;
    }

    ScenarioDataset ds;
    ds.spec = spec;

    std::vector<LabeledId> train;
    std::set<std::string> contributing;
    for (const Message& m : corpus.messages()) {
        if (train_set.count(m.event_id) == 0) continue;
        if (train_languages.count(m.language) == 0) continue;
        train.push_back({m.source_dataset, m.id, m.label});
        contributing.insert(m.event_id);
    }
    if (train.empty()) {
        throw std::runtime_error("scenario training set is empty");
    }

    std::vector<LabeledId> native_test;
    for (const Message& m : corpus.messages()) {
        if (test_set.count(m.event_id) == 0) continue;
        if (m.language != spec.target_language) continue;
        native_test.push_back({m.source_dataset, m.id, m.label});
    }

    if (options.augment) {
        std::vector<Message> pool;
        const std::vector<Message>* pool_src = options.negative_pool;
        if (pool_src == nullptr) {
            for (const Message& m : corpus.messages()) {
                if (m.label != LabelClass::NotRelated) continue;
                if (train_set.count(m.event_id) != 0) continue;
                pool.push_back(m);
            }
        } else {
            for (const Message& m : *pool_src) {
                if (train_set.count(m.event_id) != 0) continue;  // leakage guard
                pool.push_back(m);
            }
        }
        AugmentationResult aug = augment_test_negatives(
            native_test, pool, spec.target_language, spec.source_language,
            options.translator != nullptr, options.test_negative_ratio,
            derive_seed(spec.seed, fnv1a64("augment")));
        ds.test = std::move(aug.test);
        ds.augmentation_log = std::move(aug.log);
        ds.augmentation_shortfall = aug.shortfall;
    } else {
        ds.test = native_test;
        for (const LabeledId& t : native_test) {
            ds.augmentation_log.push_back({t.dataset, t.id, TestOrigin::Native});
        }
    }

    ds.train = options.balance
                   ? balance_training_set(train, derive_seed(spec.seed,
                                                             fnv1a64("balance")))
                   : std::move(train);
    ds.train_events.assign(contributing.begin(), contributing.end());
    ds.test_events = split.test_events;
    return ds;
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

namespace {

json labeled_ids_to_json(const std::vector<LabeledId>& ids) {
    json arr = json::array();
    for (const LabeledId& x : ids) {
        arr.push_back({{"dataset", x.dataset}, {"id", x.id},
                       {"label", label_name(x.label)}});
    }
    return arr;
}

std::vector<LabeledId> labeled_ids_from_json(const json& arr, const Corpus& corpus,
                                             const std::string& path) {
    std::vector<LabeledId> out;
    for (const json& item : arr) {
        LabeledId x;
        x.dataset = item.at("dataset").get<std::string>();
        x.id = item.at("id").get<std::string>();
        std::optional<LabelClass> label =
            parse_label(item.at("label").get<std::string>());
        if (!label.has_value()) {
            throw std::runtime_error(concat("manifest ", path, ": bad label for ",
                                            x.dataset, "/", x.id));
        }
        x.label = *label;
        if (corpus.find_message(x.dataset, x.id) == nullptr) {
            throw std::runtime_error(concat("manifest ", path,
                                            " references unknown message ", x.dataset,
                                            "/", x.id));
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace

void export_manifest(const ScenarioDataset& dataset, const Corpus& corpus,
                     const std::string& path) {
    json doc;
    doc["schema_version"] = 1;
    doc["corpus_hash"] = hex64(corpus_hash(corpus));
    doc["spec"] = {{"kind", scenario_kind_name(dataset.spec.kind)},
                   {"target_language", dataset.spec.target_language},
                   {"target_domain", dataset.spec.target_domain},
                   {"source_language", dataset.spec.source_language},
                   {"seed", dataset.spec.seed}};
    doc["train_events"] = dataset.train_events;
    doc["test_events"] = dataset.test_events;
    doc["train"] = labeled_ids_to_json(dataset.train);
    doc["test"] = labeled_ids_to_json(dataset.test);
    json log = json::array();
    for (const AugmentationEntry& e : dataset.augmentation_log) {
        log.push_back({{"dataset", e.dataset}, {"id", e.id},
                       {"origin", origin_name(e.origin)}});
    }
    doc["augmentation_log"] = log;
    doc["augmentation_shortfall"] = dataset.augmentation_shortfall;
    write_file(path, doc.dump(2) + "\n");
}

ScenarioDataset import_manifest(const std::string& path, const Corpus& corpus) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error(concat("manifest ", path, ": malformed JSON (",
                                        e.what(), ")"));
    }
    if (!doc.contains("schema_version") || doc.at("schema_version").get<int>() != 1) {
        throw std::runtime_error(concat("manifest ", path,
                                        ": unsupported schema version"));
    }
    std::string expected = hex64(corpus_hash(corpus));
    std::string actual = doc.at("corpus_hash").get<std::string>();
    if (actual != expected) {
        throw std::runtime_error(
            concat("manifest ", path, ": corpus hash mismatch (manifest ", actual,
                   ", corpus ", expected, "); it was built from a different corpus"));
    }

    ScenarioDataset ds;
    const json& spec = doc.at("spec");
    ds.spec.kind = parse_scenario_kind(spec.at("kind").get<std::string>());
    ds.spec.target_language = spec.at("target_language").get<std::string>();
    ds.spec.target_domain = spec.at("target_domain").get<std::string>();
    ds.spec.source_language = spec.at("source_language").get<std::string>();
    ds.spec.seed = spec.at("seed").get<uint64_t>();
    ds.train_events = doc.at("train_events").get<std::vector<std::string>>();
    ds.test_events = doc.at("test_events").get<std::vector<std::string>>();
    for (const std::string& id : ds.train_events) {
        if (corpus.find_event(id) == nullptr) {
            throw std::runtime_error(concat("manifest ", path,
                                            " references unknown event ", id));
        }
    }
    for (const std::string& id : ds.test_events) {
        if (corpus.find_event(id) == nullptr) {
            throw std::runtime_error(concat("manifest ", path,
                                            " references unknown event ", id));
        }
    }
    ds.train = labeled_ids_from_json(doc.at("train"), corpus, path);
    ds.test = labeled_ids_from_json(doc.at("test"), corpus, path);
    for (const json& item : doc.at("augmentation_log")) {
        ds.augmentation_log.push_back({item.at("dataset").get<std::string>(),
                                       item.at("id").get<std::string>(),
                                       parse_origin(item.at("origin").get<std::string>())});
    }
    ds.augmentation_shortfall = doc.value("augmentation_shortfall", 0);
    return ds;
}

std::vector<Message> materialize_messages(const Corpus& corpus,
                                          const std::vector<LabeledId>& ids) {
    std::vector<Message> out;
    out.reserve(ids.size());
    for (const LabeledId& x : ids) {
        const Message* m = corpus.find_message(x.dataset, x.id);
        if (m == nullptr) {
            throw std::runtime_error(concat("unknown message ", x.dataset, "/", x.id));
        }
        out.push_back(*m);
    }
    return out;
}

std::vector<Message> materialize_test(const Corpus& corpus,
                                      const ScenarioDataset& dataset,
                                      TranslationClient* translator) {
    std::map<std::pair<std::string, std::string>, TestOrigin> origins;
    for (const AugmentationEntry& e : dataset.augmentation_log) {
        origins[{e.dataset, e.id}] = e.origin;
    }
    std::vector<Message> out;
    out.reserve(dataset.test.size());
    for (const LabeledId& x : dataset.test) {
        const Message* m = corpus.find_message(x.dataset, x.id);
        if (m == nullptr) {
            throw std::runtime_error(concat("unknown message ", x.dataset, "/", x.id));
        }
        Message copy = *m;
        auto it = origins.find({x.dataset, x.id});
        if (it != origins.end() && it->second == TestOrigin::TranslatedNegative) {
            if (translator == nullptr) {
                throw std::runtime_error(
                    "manifest contains translated negatives but no translation client "
                    "is configured");
            }
            std::string original = copy.text;
            copy.text = translator->translate(original, copy.language,
                                              dataset.spec.target_language);
            copy.translated_text = copy.language == "en" ? original : copy.translated_text;
            copy.language = dataset.spec.target_language;
        }
        out.push_back(std::move(copy));
    }
    return out;
}

}  // namespace crisis
