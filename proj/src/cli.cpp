#include "crisis/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>

#include <CLI11.hpp>

#include "crisis/common.hpp"
#include "crisis/corpus.hpp"
#include "crisis/embed.hpp"
#include "crisis/evalx.hpp"
#include "crisis/forest.hpp"
#include "crisis/io.hpp"
#include "crisis/langdetect.hpp"
#include "crisis/lingfeat.hpp"
#include "crisis/scenario.hpp"
#include "crisis/translate.hpp"
#include "crisis/unify.hpp"

namespace crisis {
namespace {

namespace fs = std::filesystem;

CorpusFormat format_for(const std::string& path) {
    return fs::path(path).extension() == ".csv" ? CorpusFormat::DelimitedTable
                                                : CorpusFormat::UnifiedJsonLines;
}

std::string resolve_path(const fs::path& base, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
    return (base / p).lexically_normal().string();
}

// ---------------------------------------------------------------------------
// Configuration file. Flags override config fields, config overrides
// defaults. Relative paths are taken relative to the config file.
// ---------------------------------------------------------------------------

struct RunConfig {
    std::vector<std::string> sources;
    std::string corpus;
    std::string mapping;
    std::string overrides;
    std::string taxonomy;
    std::string langprof;
    std::string out = "out";
    int repeats = 5;
    uint64_t seed = 0;
    int workers = 1;
    double test_negative_ratio = 0.5;
    std::string source_language = "en";

    std::string glove;
    std::map<std::string, std::string> muse;
    std::string mbert;
    std::string mt_bert;
    std::string xlm_r;
    std::string schema;
    std::string translation_cache;
    std::string dictionary_dir;
    std::string translation_endpoint;

    std::vector<std::string> kinds;
    std::vector<std::string> reps;
    std::vector<std::string> targets;  // "language/domain"
};

void check_keys(const json& obj, const std::set<std::string>& known,
                const std::string& where, std::vector<std::string>* problems) {
    for (const auto& item : obj.items())
        if (!known.count(item.key()))
            problems->push_back(concat(where, item.key(), ": unknown key"));
}

RunConfig load_config(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw std::runtime_error(concat("config ", path, ": not a JSON object"));

    fs::path base = fs::path(path).parent_path();
    RunConfig cfg;
    std::vector<std::string> problems;

    auto path_field = [&](const json& obj, const char* key, std::string* slot) {
        if (!obj.contains(key)) return;
        if (!obj.at(key).is_string()) {
            problems.push_back(concat(key, ": expected a string"));
            return;
        }
        *slot = resolve_path(base, obj.at(key).get<std::string>());
    };
    auto string_list = [&](const json& obj, const char* key,
                           std::vector<std::string>* slot, bool paths) {
        if (!obj.contains(key)) return;
        if (!obj.at(key).is_array()) {
            problems.push_back(concat(key, ": expected an array of strings"));
            return;
        }
        for (const auto& v : obj.at(key)) {
            if (!v.is_string()) {
                problems.push_back(concat(key, ": expected an array of strings"));
                return;
            }
            slot->push_back(paths ? resolve_path(base, v.get<std::string>())
                                  : v.get<std::string>());
        }
    };

    check_keys(j,
               {"sources", "corpus", "mapping", "overrides", "taxonomy", "langprof",
                "out", "repeats", "seed", "workers", "test_negative_ratio",
                "source_language", "resources", "grid"},
               "", &problems);
    string_list(j, "sources", &cfg.sources, true);
    path_field(j, "corpus", &cfg.corpus);
    path_field(j, "mapping", &cfg.mapping);
    path_field(j, "overrides", &cfg.overrides);
    path_field(j, "taxonomy", &cfg.taxonomy);
    path_field(j, "langprof", &cfg.langprof);
    path_field(j, "out", &cfg.out);
    if (j.contains("source_language")) {
        if (!j["source_language"].is_string())
            problems.push_back("source_language: expected a string");
        else
            cfg.source_language = j["source_language"].get<std::string>();
    }
    if (j.contains("repeats")) {
        if (!j["repeats"].is_number_integer() || j["repeats"].get<int>() < 1)
            problems.push_back("repeats: expected an integer >= 1");
        else
            cfg.repeats = j["repeats"].get<int>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer())
            problems.push_back("seed: expected an integer");
        else
            cfg.seed = j["seed"].get<uint64_t>();
    }
    if (j.contains("workers")) {
        if (!j["workers"].is_number_integer() || j["workers"].get<int>() < 1)
            problems.push_back("workers: expected an integer >= 1");
        else
            cfg.workers = j["workers"].get<int>();
    }
    if (j.contains("test_negative_ratio")) {
        if (!j["test_negative_ratio"].is_number())
            problems.push_back("test_negative_ratio: expected a number");
        else
            cfg.test_negative_ratio = j["test_negative_ratio"].get<double>();
    }

    if (j.contains("resources")) {
        const json& r = j["resources"];
        if (!r.is_object()) {
            problems.push_back("resources: expected an object");
        } else {
            check_keys(r,
                       {"glove", "muse", "mbert", "mt_bert", "xlm_r", "schema",
                        "translation_cache", "dictionary_dir", "translation_endpoint"},
                       "resources.", &problems);
            path_field(r, "glove", &cfg.glove);
            path_field(r, "mbert", &cfg.mbert);
            path_field(r, "mt_bert", &cfg.mt_bert);
            path_field(r, "xlm_r", &cfg.xlm_r);
            path_field(r, "schema", &cfg.schema);
            path_field(r, "translation_cache", &cfg.translation_cache);
            path_field(r, "dictionary_dir", &cfg.dictionary_dir);
            if (r.contains("translation_endpoint")) {
                if (!r["translation_endpoint"].is_string())
                    problems.push_back("resources.translation_endpoint: expected a string");
                else
                    cfg.translation_endpoint = r["translation_endpoint"].get<std::string>();
            }
            if (r.contains("muse")) {
                if (!r["muse"].is_object()) {
                    problems.push_back(
                        "resources.muse: expected an object of language -> path");
                } else {
                    for (const auto& item : r["muse"].items()) {
                        if (!item.value().is_string())
                            problems.push_back(concat("resources.muse.", item.key(),
                                                      ": expected a string"));
                        else
                            cfg.muse[item.key()] =
                                resolve_path(base, item.value().get<std::string>());
                    }
                }
            }
        }
    }

    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (!g.is_object()) {
            problems.push_back("grid: expected an object");
        } else {
            check_keys(g, {"kinds", "representations", "targets"}, "grid.", &problems);
            string_list(g, "kinds", &cfg.kinds, false);
            string_list(g, "representations", &cfg.reps, false);
            string_list(g, "targets", &cfg.targets, false);
            for (const auto& k : cfg.kinds) {
                try {
                    parse_scenario_kind(k);
                } catch (const std::exception& e) {
                    problems.push_back(concat("grid.kinds: ", e.what()));
                }
            }
            for (const auto& r : cfg.reps) {
                try {
                    parse_representation(r);
                } catch (const std::exception& e) {
                    problems.push_back(concat("grid.representations: ", e.what()));
                }
            }
            for (const auto& t : cfg.targets) {
                auto parts = split(t, '/');
                if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
                    problems.push_back(concat(
                        "grid.targets: expected \"language/domain\", got \"", t, "\""));
            }
        }
    }

    if (!problems.empty())
        throw std::runtime_error(concat("config ", path, " invalid:\n  - ",
                                        join(problems, "\n  - ")));
    return cfg;
}

std::vector<std::pair<std::string, std::string>> parse_targets(
    const std::vector<std::string>& specs) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& t : specs) {
        auto parts = split(t, '/');
        if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
            throw std::runtime_error(
                concat("target must be \"language/domain\", got \"", t, "\""));
        out.emplace_back(parts[0], parts[1]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Resource loading. Only what the requested representations need is read.
// ---------------------------------------------------------------------------

struct ResourceBox {
    FeatureSchema schema = FeatureSchema::v1();
    std::optional<VectorTable> glove;
    std::map<std::string, VectorTable> muse;
    std::optional<ContextualCache> mbert;
    std::optional<ContextualCache> mt_bert;
    std::optional<ContextualCache> xlm_r;
    std::shared_ptr<TranslationClient> inner;
    std::unique_ptr<CachingTranslator> cached;
    TranslationClient* translator = nullptr;
    EmbeddingResources view;

    void finalize() {
        view = EmbeddingResources{};
        view.schema = &schema;
        view.annotators = &default_annotators();
        if (glove) view.glove = &*glove;
        for (auto& [code, table] : muse) view.muse[code] = &table;
        if (mbert) view.mbert = &*mbert;
        if (mt_bert) view.mt_bert = &*mt_bert;
        if (xlm_r) view.xlm_r = &*xlm_r;
        view.translator = translator;
    }
};

void build_translator(const RunConfig& cfg, ResourceBox& box) {
    std::shared_ptr<TranslationClient> inner;
    if (!cfg.dictionary_dir.empty()) {
        auto dict = std::make_shared<DictionaryTranslator>();
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(cfg.dictionary_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            auto parts = split(f.stem().string(), '_');
            if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
                throw std::runtime_error(concat(
                    "dictionary file name must be <source>_<target>.csv: ", f.string()));
            dict->load_pair(parts[0], parts[1], f.string());
        }
        inner = dict;
    } else {
        std::string endpoint = cfg.translation_endpoint;
        const char* env = std::getenv("CRISISXFER_TRANSLATE_ENDPOINT");
        if (env && *env) endpoint = env;
        if (!endpoint.empty()) inner = std::make_shared<HttpTranslator>(endpoint);
    }
    box.inner = inner;
    if (!cfg.translation_cache.empty()) {
        box.cached = std::make_unique<CachingTranslator>(cfg.translation_cache, inner);
        box.translator = box.cached.get();
    } else {
        box.translator = inner.get();
    }
}

void load_resources(const RunConfig& cfg, const std::set<Representation>& reps,
                    bool want_translator, ResourceBox& box) {
    std::vector<std::string> missing;
    if (!cfg.schema.empty()) box.schema = FeatureSchema::load(cfg.schema);

    if (reps.count(Representation::MtGlove)) {
        if (cfg.glove.empty())
            missing.push_back("resources.glove (needed by mt_glove)");
        else
            box.glove = load_word_vectors(
                cfg.glove, representation_width(Representation::MtGlove));
    }
    if (reps.count(Representation::Muse) || reps.count(Representation::MuseLf)) {
        if (cfg.muse.empty())
            missing.push_back("resources.muse (needed by muse / muse_lf)");
        for (const auto& [code, table_path] : cfg.muse) {
            auto table = load_word_vectors(table_path,
                                           representation_width(Representation::Muse));
            table.set_name(concat("muse_", code));
            box.muse.emplace(code, std::move(table));
        }
    }
    auto cache_field = [&](Representation rep, const std::string& cache_path,
                           const char* key, std::optional<ContextualCache>& slot,
                           const char* model) {
        if (!reps.count(rep)) return;
        if (cache_path.empty()) {
            missing.push_back(concat(key, " (needed by ", representation_name(rep), ")"));
            return;
        }
        slot = ContextualCache::load(cache_path, model);
    };
    cache_field(Representation::MBert, cfg.mbert, "resources.mbert", box.mbert, "mbert");
    cache_field(Representation::MtBert, cfg.mt_bert, "resources.mt_bert", box.mt_bert,
                "mt_bert");
    cache_field(Representation::XlmR, cfg.xlm_r, "resources.xlm_r", box.xlm_r, "xlm_r");

    if (!missing.empty())
        throw std::runtime_error(
            concat("config is missing resources:\n  - ", join(missing, "\n  - ")));
    if (want_translator) build_translator(cfg, box);
    box.finalize();
}

// ---------------------------------------------------------------------------
// Feature matrix files (the `features` output, consumed by train/eval).
// ---------------------------------------------------------------------------

struct LoadedMatrix {
    std::vector<std::string> ids;
    std::vector<LabelClass> labels;
    FeatureMatrix matrix;
};

LoadedMatrix load_matrix_csv(const std::string& path) {
    Table t = read_csv(path);
    if (t.header.size() < 3 || t.header[0] != "id" || t.header[1] != "label")
        throw std::runtime_error(concat(path, ": expected header id,label,<features>"));
    LoadedMatrix out;
    out.matrix.column_names.assign(t.header.begin() + 2, t.header.end());
    Eigen::Index width = static_cast<Eigen::Index>(t.header.size() - 2);
    out.matrix.values.resize(static_cast<Eigen::Index>(t.rows.size()), width);
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        size_t line = i + 2;
        if (row.size() != t.header.size())
            throw std::runtime_error(
                concat(path, ":", line, ": expected ", t.header.size(), " fields, found ",
                       row.size()));
        out.ids.push_back(row[0]);
        auto label = parse_label(row[1]);
        if (!label)
            throw std::runtime_error(
                concat(path, ":", line, ": unknown label '", row[1], "'"));
        out.labels.push_back(*label);
        for (Eigen::Index j = 0; j < width; ++j) {
            const std::string& field = row[static_cast<size_t>(j) + 2];
            char* end = nullptr;
            double v = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || (end && *end != '\0'))
                throw std::runtime_error(concat(path, ":", line, ": column '",
                                                out.matrix.column_names[j],
                                                "' is not a number: '", field, "'"));
            out.matrix.values(static_cast<Eigen::Index>(i), j) = v;
        }
    }
    return out;
}

Representation infer_representation(const std::vector<std::string>& cols,
                                    const std::string& path) {
    if (!cols.empty()) {
        const std::string& first = cols.front();
        int width = static_cast<int>(cols.size());
        if (first == "char_count" && width == representation_width(Representation::LF))
            return Representation::LF;
        if (first == "mt_glove_0") return Representation::MtGlove;
        if (first == "muse_0" && width == representation_width(Representation::Muse))
            return Representation::Muse;
        if (first == "muse_0" && width == representation_width(Representation::MuseLf))
            return Representation::MuseLf;
        if (first == "mbert_0") return Representation::MBert;
        if (first == "mt_bert_0") return Representation::MtBert;
        if (first == "xlm_r_0") return Representation::XlmR;
    }
    throw std::runtime_error(
        concat(path, ": cannot infer the representation from the header; pass --rep"));
}

[[noreturn]] void fail_stage(const std::string& context, const std::string& stage,
                             const std::exception& cause) {
    throw std::runtime_error(concat(context, " stage=", stage, ": ", cause.what()));
}

std::string spec_context(const ScenarioSpec& spec) {
    return concat("scenario=", scenario_kind_name(spec.kind), " target=",
                  spec.target_language, "/", spec.target_domain);
}

// ---------------------------------------------------------------------------
// Subcommand bodies.
// ---------------------------------------------------------------------------

int cmd_unify(const RunConfig& cfg, const std::string& out_path, std::ostream& out) {
    if (cfg.sources.empty())
        throw std::runtime_error("unify needs at least one --source file");
    if (cfg.mapping.empty())
        throw std::runtime_error("unify needs a label mapping file (--mapping)");
    if (cfg.taxonomy.empty())
        throw std::runtime_error("unify needs a taxonomy file (--taxonomy)");

    LabelMapping mapping = LabelMapping::load(cfg.mapping);
    if (!cfg.overrides.empty()) mapping.load_overrides(cfg.overrides);
    mapping.check();

    std::vector<RawRow> rows;
    for (const auto& src : cfg.sources) {
        auto batch = load_raw_rows(src, format_for(src));
        rows.insert(rows.end(), batch.begin(), batch.end());
    }

    MappingResult result = apply_label_mapping(rows, mapping);
    if (!result.unmapped.empty()) {
        std::vector<std::string> items;
        for (const auto& [dataset, label] : result.unmapped)
            items.push_back(concat(dataset, ": '", label, "'"));
        throw std::runtime_error(
            concat("unmapped labels:\n  - ", join(items, "\n  - ")));
    }

    auto taxonomy = load_taxonomy(cfg.taxonomy);
    std::map<std::string, const TaxonomyRecord*> by_id;
    for (const auto& rec : taxonomy) by_id[rec.event_id] = &rec;

    std::vector<std::string> event_order;
    std::set<std::string> seen_events;
    std::vector<std::string> missing;
    for (const auto& m : result.messages)
        if (seen_events.insert(m.event_id).second) {
            if (by_id.count(m.event_id)) event_order.push_back(m.event_id);
            else missing.push_back(m.event_id);
        }
    if (!missing.empty())
        throw std::runtime_error(
            concat("events missing from the taxonomy: ", join(missing, ", ")));

    Corpus corpus;
    for (const auto& id : event_order) {
        const TaxonomyRecord& r = *by_id.at(id);
        Event e;
        e.id = r.event_id;
        e.name = r.name;
        e.hazard_type = r.hazard_type;
        e.hazard_category = r.hazard_category;
        e.hazard_subcategory = r.hazard_subcategory;
        e.temporal_development = r.temporal_development;
        e.geographic_spread = r.geographic_spread;
        e.country = r.country;
        e.year = r.year;
        corpus.add_event(e);
    }
    for (const auto& m : result.messages) corpus.add_message(m);
    std::set<std::string> seen_datasets;
    for (const auto& m : result.messages)
        if (seen_datasets.insert(m.source_dataset).second)
            corpus.add_provenance(m.source_dataset);

    if (auto parent = fs::path(out_path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    save_corpus(corpus, out_path, format_for(out_path));
    out << "unified " << corpus.size() << " messages across " << corpus.events().size()
        << " events (" << result.discarded << " discarded); wrote " << out_path << "\n";
    return 0;
}

int cmd_detect_lang(const RunConfig& cfg, const std::string& out_path,
                    std::ostream& out) {
    if (cfg.corpus.empty()) throw std::runtime_error("detect-lang needs --corpus");
    std::string dir = cfg.langprof;
    if (dir.empty()) dir = std::string(CRISISXFER_DATA_DIR) + "/langprof";
    auto profiles = LanguageProfileSet::load_dir(dir);
    if (profiles.empty())
        throw std::runtime_error(concat("no language profiles found in ", dir));

    Corpus src = load_corpus(cfg.corpus, format_for(cfg.corpus));
    Corpus dst;
    for (const auto& e : src.events()) dst.add_event(e);
    size_t filled = 0, skipped = 0;
    for (Message m : src.messages()) {
        if (m.language.empty()) {
            try {
                m.language = detect_language(m.text, profiles).code;
                ++filled;
            } catch (const std::exception&) {
                ++skipped;  // too little signal; validate will flag the row
            }
        }
        dst.add_message(std::move(m));
    }
    for (const auto& p : src.provenance()) dst.add_provenance(p);

    if (auto parent = fs::path(out_path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    save_corpus(dst, out_path, format_for(out_path));
    out << "filled " << filled << " languages";
    if (skipped) out << " (" << skipped << " left empty: insufficient signal)";
    out << "; wrote " << out_path << "\n";
    return 0;
}

int cmd_scenario(const RunConfig& cfg, const std::string& kind_name,
                 const std::string& target_lang, const std::string& target_domain,
                 const std::string& out_path, std::ostream& out) {
    if (cfg.corpus.empty()) throw std::runtime_error("scenario needs --corpus");
    Corpus corpus = load_corpus(cfg.corpus, format_for(cfg.corpus));

    ResourceBox box;
    build_translator(cfg, box);
    ScenarioBuildOptions opts;
    opts.test_negative_ratio = cfg.test_negative_ratio;
    opts.translator = box.translator;

    struct Cell {
        ScenarioKind kind;
        std::string language;
        std::string domain;
    };
    std::vector<Cell> cells;
    bool single = !kind_name.empty();
    if (single) {
        if (target_lang.empty() || target_domain.empty())
            throw std::runtime_error(
                "scenario needs --target-lang and --target-domain");
        cells.push_back({parse_scenario_kind(kind_name), target_lang, target_domain});
    } else {
        if (cfg.kinds.empty() || cfg.targets.empty())
            throw std::runtime_error(
                "scenario grid mode needs grid.kinds and grid.targets in the config");
        for (const auto& k : cfg.kinds)
            for (const auto& [language, domain] : parse_targets(cfg.targets))
                cells.push_back({parse_scenario_kind(k), language, domain});
    }

    for (const auto& cell : cells) {
        ScenarioSpec spec;
        spec.kind = cell.kind;
        spec.target_language = cell.language;
        spec.target_domain = cell.domain;
        spec.source_language = cfg.source_language;
        spec.seed = cfg.seed;

        ScenarioDataset ds;
        try {
            ds = build_scenario(corpus, spec, opts);
        } catch (const std::exception& e) {
            fail_stage(spec_context(spec), "scenario", e);
        }

        std::string name = concat("scenario_", scenario_kind_name(cell.kind), "_",
                                  cell.language, "_", cell.domain, ".json");
        fs::path manifest_path;
        if (single && !out_path.empty())
            manifest_path = out_path;
        else
            manifest_path = fs::path(out_path.empty() ? cfg.out : out_path) / name;
        if (auto parent = manifest_path.parent_path(); !parent.empty())
            fs::create_directories(parent);
        export_manifest(ds, corpus, manifest_path.string());
        out << "wrote " << manifest_path.string() << " (train " << ds.train.size()
            << ", test " << ds.test.size() << ")\n";
    }
    return 0;
}

int cmd_features(const RunConfig& cfg, const std::string& manifest_path,
                 const std::string& rep_name, const std::string& out_path,
                 std::ostream& out, std::ostream& err) {
    if (cfg.corpus.empty()) throw std::runtime_error("features needs --corpus");
    if (manifest_path.empty()) throw std::runtime_error("features needs --manifest");
    if (rep_name.empty()) throw std::runtime_error("features needs --rep");
    Representation rep = parse_representation(rep_name);

    Corpus corpus = load_corpus(cfg.corpus, format_for(cfg.corpus));
    ScenarioDataset ds = import_manifest(manifest_path, corpus);
    std::string context =
        concat(spec_context(ds.spec), " rep=", representation_name(rep));

    ResourceBox box;
    load_resources(cfg, {rep}, true, box);

    std::vector<Message> train_messages, test_messages;
    try {
        train_messages = materialize_messages(corpus, ds.train);
        test_messages = materialize_test(corpus, ds, box.translator);
    } catch (const std::exception& e) {
        fail_stage(context, "materialize", e);
    }

    FeatureMatrix train_x, test_x;
    std::vector<std::string> warnings;
    try {
        train_x = build_representation(train_messages, rep, box.view, &warnings);
        test_x = build_representation(test_messages, rep, box.view, &warnings);
    } catch (const std::exception& e) {
        fail_stage(context, "features", e);
    }
    for (const auto& w : warnings) err << "warning: " << w << "\n";

    fs::path dir(out_path.empty() ? cfg.out : out_path);
    fs::create_directories(dir);
    auto train_path = dir / concat("train_", representation_name(rep), ".csv");
    auto test_path = dir / concat("test_", representation_name(rep), ".csv");
    save_matrix_csv(train_x, train_messages, train_path.string());
    save_matrix_csv(test_x, test_messages, test_path.string());
    out << "wrote " << train_path.string() << " (" << train_messages.size()
        << " rows)\n";
    out << "wrote " << test_path.string() << " (" << test_messages.size() << " rows)\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& matrix_path,
              const std::string& rep_name, int trees, const std::string& out_path,
              std::ostream& out) {
    if (matrix_path.empty()) throw std::runtime_error("train needs --matrix");
    LoadedMatrix lm = load_matrix_csv(matrix_path);
    Representation rep = rep_name.empty()
                             ? infer_representation(lm.matrix.column_names, matrix_path)
                             : parse_representation(rep_name);
    lm.matrix.rep = rep;

    ForestParams params;
    params.n_trees = trees;
    params.seed = cfg.seed;

    RandomForestModel model;
    try {
        model = fit_forest(lm.matrix, lm.labels, params, cfg.workers);
    } catch (const std::exception& e) {
        fail_stage(concat("rep=", representation_name(rep)), "train", e);
    }

    std::string path = out_path;
    if (path.empty())
        path = (fs::path(cfg.out) / concat("model_", representation_name(rep), ".json"))
                   .string();
    if (auto parent = fs::path(path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    save_model(model, path);
    out << "trained " << params.n_trees << " trees on " << lm.ids.size() << " rows ("
        << model.feature_count << " features); wrote " << path << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& model_path,
             const std::string& matrix_path, const std::string& out_path,
             std::ostream& out) {
    if (model_path.empty()) throw std::runtime_error("eval needs --model");
    if (matrix_path.empty()) throw std::runtime_error("eval needs --matrix");
    RandomForestModel model = load_model(model_path);
    LoadedMatrix lm = load_matrix_csv(matrix_path);

    ConfusionCounts counts;
    try {
        counts = confusion_counts(predict(model, lm.matrix.values), lm.labels);
    } catch (const std::exception& e) {
        fail_stage(concat("rep=", representation_name(model.representation)), "eval", e);
    }
    double pos = f1_score(counts, F1Mode::Positive);
    double macro = f1_score(counts, F1Mode::Macro);
    double weighted = f1_score(counts, F1Mode::Weighted);

    out << "f1_positive=" << format_double(pos) << " f1_macro=" << format_double(macro)
        << " f1_weighted=" << format_double(weighted) << " (tp=" << counts.tp
        << " fp=" << counts.fp << " tn=" << counts.tn << " fn=" << counts.fn << ")\n";

    if (!out_path.empty()) {
        json j;
        j["representation"] = representation_name(model.representation);
        j["counts"] = {{"tp", counts.tp},
                       {"fp", counts.fp},
                       {"tn", counts.tn},
                       {"fn", counts.fn}};
        j["f1_positive"] = pos;
        j["f1_macro"] = macro;
        j["f1_weighted"] = weighted;
        if (auto parent = fs::path(out_path).parent_path(); !parent.empty())
            fs::create_directories(parent);
        write_file(out_path, j.dump(2) + "\n");
        out << "wrote " << out_path << "\n";
    }
    (void)cfg;
    return 0;
}

int cmd_run_matrix(const RunConfig& cfg, const std::vector<std::string>& kind_flags,
                   const std::vector<std::string>& rep_flags,
                   const std::string& target_lang, const std::string& target_domain,
                   const std::string& out_path, std::ostream& out, std::ostream& err) {
    if (cfg.corpus.empty())
        throw std::runtime_error("run-matrix needs a corpus (--corpus or config)");
    Corpus corpus = load_corpus(cfg.corpus, format_for(cfg.corpus));

    MatrixOptions mo;
    for (const auto& k : kind_flags.empty() ? cfg.kinds : kind_flags)
        mo.kinds.push_back(parse_scenario_kind(k));
    for (const auto& r : rep_flags.empty() ? cfg.reps : rep_flags)
        mo.reps.push_back(parse_representation(r));
    if (!target_lang.empty() || !target_domain.empty()) {
        if (target_lang.empty() || target_domain.empty())
            throw std::runtime_error(
                "run-matrix needs both --target-lang and --target-domain");
        mo.targets.emplace_back(target_lang, target_domain);
    } else {
        mo.targets = parse_targets(cfg.targets);
    }
    mo.source_language = cfg.source_language;
    mo.repeats = cfg.repeats;
    mo.master_seed = cfg.seed;
    mo.test_negative_ratio = cfg.test_negative_ratio;
    mo.workers = cfg.workers;

    std::set<Representation> needed(mo.reps.begin(), mo.reps.end());
    if (needed.empty())
        needed.insert(std::begin(kAllRepresentations), std::end(kAllRepresentations));
    ResourceBox box;
    load_resources(cfg, needed, true, box);
    mo.translator = box.translator;

    RunMatrix matrix = run_matrix(corpus, box.view, mo);

    std::string dir = out_path.empty() ? cfg.out : out_path;
    std::vector<std::string> files;
    for (ReportFormat format : {ReportFormat::Delimited, ReportFormat::Structured,
                                ReportFormat::PlotData}) {
        auto written = emit_report(matrix, format, dir);
        files.insert(files.end(), written.begin(), written.end());
    }

    size_t failed = 0;
    for (const auto& cell : matrix.cells)
        if (!cell.error.empty()) {
            ++failed;
            err << "cell failed: " << cell.error << "\n";
        }
    for (const auto& f : files) out << "wrote " << f << "\n";
    out << "cells: " << (matrix.cells.size() - failed) << " ok, " << failed
        << " failed\n";
    return failed == 0 ? 0 : 2;
}

RunMatrix parse_report_file(const std::string& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("cells"))
        throw std::runtime_error(concat(path, ": not a structured report file"));
    std::vector<MatrixCell> cells;
    try {
        for (const auto& cj : j.at("cells")) {
            MatrixCell c;
            c.kind = parse_scenario_kind(cj.at("scenario").get<std::string>());
            c.target_language = cj.at("target_language").get<std::string>();
            c.target_domain = cj.at("target_domain").get<std::string>();
            c.rep = parse_representation(cj.at("representation").get<std::string>());
            if (cj.contains("error")) {
                c.error = cj.at("error").get<std::string>();
                cells.push_back(std::move(c));
                continue;
            }
            EvalReport& r = c.report;
            r.spec.kind = c.kind;
            r.spec.target_language = c.target_language;
            r.spec.target_domain = c.target_domain;
            r.rep = c.rep;
            const json& avg = cj.at("averaged");
            r.averaged.f1_positive = avg.at("f1_positive").get<double>();
            r.averaged.f1_macro = avg.at("f1_macro").get<double>();
            r.averaged.f1_weighted = avg.at("f1_weighted").get<double>();
            for (const auto& rj : cj.at("runs")) {
                RunMetrics m;
                m.seed = rj.at("seed").get<uint64_t>();
                m.counts.tp = rj.at("tp").get<long long>();
                m.counts.fp = rj.at("fp").get<long long>();
                m.counts.tn = rj.at("tn").get<long long>();
                m.counts.fn = rj.at("fn").get<long long>();
                m.f1_positive = rj.at("f1_positive").get<double>();
                m.f1_macro = rj.at("f1_macro").get<double>();
                m.f1_weighted = rj.at("f1_weighted").get<double>();
                r.runs.push_back(m);
            }
            r.test_hash = cj.at("test_hash").get<std::string>();
            r.test_related = cj.at("test_related").get<int>();
            r.test_not_related = cj.at("test_not_related").get<int>();
            r.augmentation_shortfall = cj.value("augmentation_shortfall", 0);
            r.train_size = cj.value("train_size", 0);
            cells.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error(concat("structured report ", path, ": ", e.what()));
    }
    return aggregate_matrix(cells);
}

ReportFormat parse_report_format(const std::string& name) {
    if (name == "delimited") return ReportFormat::Delimited;
    if (name == "structured") return ReportFormat::Structured;
    if (name == "plotdata") return ReportFormat::PlotData;
    throw std::runtime_error(concat(
        "unknown report format '", name, "' (expected delimited, structured, plotdata)"));
}

int cmd_report(const RunConfig& cfg, const std::string& results_path,
               const std::string& format_name, const std::string& out_path,
               std::ostream& out) {
    if (results_path.empty())
        throw std::runtime_error("report needs --results (a report.json file)");
    RunMatrix matrix = parse_report_file(results_path);
    auto files = emit_report(matrix, parse_report_format(format_name),
                             out_path.empty() ? cfg.out : out_path);
    for (const auto& f : files) out << "wrote " << f << "\n";
    return 0;
}

int cmd_validate(const RunConfig& cfg, const std::string& manifest_path,
                 std::ostream& out, std::ostream& err) {
    if (cfg.corpus.empty())
        throw std::runtime_error("validate needs --corpus");
    Corpus corpus = load_corpus(cfg.corpus, format_for(cfg.corpus));
    auto violations = validate_corpus(corpus);
    for (const auto& v : violations) {
        out << v.kind << " " << v.id << ": " << v.rule;
        if (!v.detail.empty()) out << " (" << v.detail << ")";
        out << "\n";
    }
    out << "corpus: " << corpus.size() << " messages, " << corpus.events().size()
        << " events, " << violations.size() << " violations\n";
    int status = violations.empty() ? 0 : 1;

    if (!manifest_path.empty()) {
        try {
            ScenarioDataset ds = import_manifest(manifest_path, corpus);
            out << "manifest ok: " << spec_context(ds.spec) << " (train "
                << ds.train.size() << ", test " << ds.test.size() << ")\n";
        } catch (const std::exception& e) {
            err << "manifest invalid: " << e.what() << "\n";
            status = 1;
        }
    }
    return status;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
    CLI::App app{"cross-lingual / cross-domain crisis tweet classification driver"};
    app.name("crisisxfer");
    app.require_subcommand(1);

    std::string config_path, corpus_flag, mapping_flag, overrides_flag, taxonomy_flag,
        out_flag, kind_flag, target_lang_flag, target_domain_flag, rep_flag,
        manifest_flag, matrix_flag, model_flag, results_flag, profiles_flag;
    std::string format_flag = "delimited";
    std::vector<std::string> source_flags, kind_flags, rep_flags;
    int repeats_flag = 5, workers_flag = 1, trees_flag = 100;
    uint64_t seed_flag = 0;
    double ratio_flag = 0.5;

    auto with_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file (JSON)");
        return sub;
    };

    CLI::App* s_unify =
        with_common(app.add_subcommand("unify", "merge sources into a unified corpus"));
    s_unify->add_option("--source", source_flags, "source dataset file (repeatable)");
    s_unify->add_option("--mapping", mapping_flag, "label mapping table (CSV)");
    s_unify->add_option("--overrides", overrides_flag, "per-message label overrides");
    s_unify->add_option("--taxonomy", taxonomy_flag, "event taxonomy table (CSV)");
    s_unify->add_option("--out", out_flag, "unified corpus output path")->required();

    CLI::App* s_detect = with_common(
        app.add_subcommand("detect-lang", "fill missing message languages"));
    s_detect->add_option("--corpus", corpus_flag, "unified corpus file");
    s_detect->add_option("--profiles", profiles_flag, "language profile directory");
    s_detect->add_option("--out", out_flag, "output corpus path")->required();

    CLI::App* s_scenario = with_common(
        app.add_subcommand("scenario", "build train/test split manifests"));
    s_scenario->add_option("--corpus", corpus_flag, "unified corpus file");
    s_scenario->add_option("--kind", kind_flag, "scenario kind");
    s_scenario->add_option("--target-lang", target_lang_flag, "target language code");
    s_scenario->add_option("--target-domain", target_domain_flag, "target hazard type");
    s_scenario->add_option("--seed", seed_flag, "master seed");
    s_scenario->add_option("--ratio", ratio_flag, "test negative ratio (0, 0.5]");
    s_scenario->add_option("--out", out_flag, "manifest file (single) or directory");

    CLI::App* s_features = with_common(
        app.add_subcommand("features", "emit representation matrices for a manifest"));
    s_features->add_option("--corpus", corpus_flag, "unified corpus file");
    s_features->add_option("--manifest", manifest_flag, "scenario manifest file");
    s_features->add_option("--rep", rep_flag, "representation name");
    s_features->add_option("--out", out_flag, "output directory");

    CLI::App* s_train =
        with_common(app.add_subcommand("train", "fit a random forest on a matrix"));
    s_train->add_option("--matrix", matrix_flag, "training matrix CSV");
    s_train->add_option("--rep", rep_flag, "representation name (default: inferred)");
    s_train->add_option("--trees", trees_flag, "number of trees");
    s_train->add_option("--seed", seed_flag, "forest seed");
    s_train->add_option("--workers", workers_flag, "worker threads");
    s_train->add_option("--out", out_flag, "model output path");

    CLI::App* s_eval =
        with_common(app.add_subcommand("eval", "score a model on a test matrix"));
    s_eval->add_option("--model", model_flag, "model file");
    s_eval->add_option("--matrix", matrix_flag, "test matrix CSV");
    s_eval->add_option("--out", out_flag, "metrics output path (JSON)");

    CLI::App* s_matrix = with_common(app.add_subcommand(
        "run-matrix", "run the full scenario x representation grid"));
    s_matrix->add_option("--corpus", corpus_flag, "unified corpus file");
    s_matrix->add_option("--kind", kind_flags, "scenario kind (repeatable)");
    s_matrix->add_option("--rep", rep_flags, "representation (repeatable)");
    s_matrix->add_option("--target-lang", target_lang_flag, "restrict to one language");
    s_matrix->add_option("--target-domain", target_domain_flag,
                         "restrict to one hazard type");
    s_matrix->add_option("--repeats", repeats_flag, "runs per cell");
    s_matrix->add_option("--seed", seed_flag, "master seed");
    s_matrix->add_option("--ratio", ratio_flag, "test negative ratio (0, 0.5]");
    s_matrix->add_option("--workers", workers_flag, "parallel cells");
    s_matrix->add_option("--out", out_flag, "report output directory");

    CLI::App* s_report = with_common(
        app.add_subcommand("report", "re-emit tables from a structured report"));
    s_report->add_option("--results", results_flag, "report.json from run-matrix");
    s_report->add_option("--format", format_flag,
                         "delimited | structured | plotdata");
    s_report->add_option("--out", out_flag, "output directory");

    CLI::App* s_validate = with_common(
        app.add_subcommand("validate", "check a corpus and optionally a manifest"));
    s_validate->add_option("--corpus", corpus_flag, "unified corpus file");
    s_validate->add_option("--manifest", manifest_flag, "scenario manifest file");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("crisisxfer");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        err << "\n" << app.help();
        return code == 0 ? 1 : code;
    }

    CLI::App* sub = app.get_subcommands().front();
    auto given = [&](const std::string& name) {
        const CLI::Option* opt = sub->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (given("--corpus")) cfg.corpus = corpus_flag;
        if (given("--mapping")) cfg.mapping = mapping_flag;
        if (given("--overrides")) cfg.overrides = overrides_flag;
        if (given("--taxonomy")) cfg.taxonomy = taxonomy_flag;
        if (given("--source")) cfg.sources = source_flags;
        if (given("--profiles")) cfg.langprof = profiles_flag;
        if (given("--repeats")) cfg.repeats = repeats_flag;
        if (given("--seed")) cfg.seed = seed_flag;
        if (given("--workers")) cfg.workers = workers_flag;
        if (given("--ratio")) cfg.test_negative_ratio = ratio_flag;
        std::string out_path = given("--out") ? out_flag : "";

        if (sub == s_unify) return cmd_unify(cfg, out_flag, out);
        if (sub == s_detect) return cmd_detect_lang(cfg, out_flag, out);
        if (sub == s_scenario)
            return cmd_scenario(cfg, kind_flag, target_lang_flag, target_domain_flag,
                                out_path, out);
        if (sub == s_features)
            return cmd_features(cfg, manifest_flag, rep_flag, out_path, out, err);
        if (sub == s_train)
            return cmd_train(cfg, matrix_flag, rep_flag, trees_flag, out_path, out);
        if (sub == s_eval) return cmd_eval(cfg, model_flag, matrix_flag, out_path, out);
        if (sub == s_matrix)
            return cmd_run_matrix(cfg, kind_flags, rep_flags, target_lang_flag,
                                  target_domain_flag, out_path, out, err);
        if (sub == s_report)
            return cmd_report(cfg, results_flag, format_flag, out_path, out);
        if (sub == s_validate) return cmd_validate(cfg, manifest_flag, out, err);
        err << "error: unhandled subcommand\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace crisis
