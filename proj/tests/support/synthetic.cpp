#include "synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "crisis/common.hpp"
#include "crisis/io.hpp"

namespace synth {

namespace fs = std::filesystem;
using crisis::concat;

namespace {

// Aligned vocabulary: index i in a domain list means the same word across
// languages, which defines both the dictionaries and the MUSE alignment.
constexpr int kDomainWords = 8;
const char* kRelated[3][3][kDomainWords] = {
    // en
    {{"earthquake", "tremor", "quake", "aftershock", "rubble", "collapsed",
      "magnitude", "epicenter"},
     {"flood", "river", "overflow", "levee", "rainfall", "evacuation", "sandbags",
      "waterlevel"},
     {"explosion", "blast", "factory", "smoke", "firefighters", "debris",
      "shockwave", "flames"}},
    // es
    {{"terremoto", "temblor", "sismo", "replica", "escombros", "derrumbe",
      "magnitud", "epicentro"},
     {"inundacion", "rio", "desborde", "dique", "lluvia", "evacuacion", "sacos",
      "nivel"},
     {"explosion", "estallido", "fabrica", "humo", "bomberos", "restos", "onda",
      "llamas"}},
    // it
    {{"terremoto", "scossa", "sisma", "replica", "macerie", "crollo", "magnitudo",
      "epicentro"},
     {"alluvione", "fiume", "esondazione", "argine", "pioggia", "evacuazione",
      "sacchi", "livello"},
     {"esplosione", "scoppio", "fabbrica", "fumo", "pompieri", "detriti", "onda",
      "fiamme"}},
};

constexpr int kOffWords = 10;
const char* kUnrelated[3][kOffWords] = {
    {"concert", "recipe", "football", "weekend", "birthday", "movie", "coffee",
     "sunshine", "holiday", "puppy"},
    {"concierto", "receta", "futbol", "descanso", "cumple", "pelicula", "cafe",
     "sol", "vacaciones", "cachorro"},
    {"concerto", "ricetta", "calcio", "riposo", "compleanno", "film", "caffe",
     "sole", "vacanza", "cucciolo"},
};

constexpr int kGlueWords = 6;
const char* kGlue[3][kGlueWords] = {
    {"the", "in", "now", "near", "city", "people"},
    {"el", "en", "ahora", "cerca", "ciudad", "gente"},
    {"il", "in", "adesso", "vicino", "citta", "gente"},
};

int lang_index(const std::string& code) {
    for (size_t i = 0; i < languages().size(); ++i)
        if (languages()[i] == code) return static_cast<int>(i);
    throw std::invalid_argument(concat("unknown synthetic language: ", code));
}

// English equivalent of any synthetic token (identity for English and for
// tokens without an alignment entry, e.g. punctuation).
std::string english_of(const std::string& token) {
    for (int l = 1; l < 3; ++l) {
        for (int d = 0; d < 3; ++d)
            for (int w = 0; w < kDomainWords; ++w)
                if (token == kRelated[l][d][w]) return kRelated[0][d][w];
        for (int w = 0; w < kOffWords; ++w)
            if (token == kUnrelated[l][w]) return kUnrelated[0][w];
        for (int w = 0; w < kGlueWords; ++w)
            if (token == kGlue[l][w]) return kGlue[0][w];
    }
    return token;
}

std::vector<std::string> message_tokens(int lang, int domain, bool related, int i) {
    std::vector<std::string> tokens;
    tokens.push_back(kGlue[lang][i % kGlueWords]);
    int picks = 3 + i % 3;
    for (int k = 0; k < picks; ++k) {
        if (related)
            tokens.push_back(kRelated[lang][domain][(i + 2 * k) % kDomainWords]);
        else
            tokens.push_back(kUnrelated[lang][(i + 3 * k) % kOffWords]);
    }
    tokens.push_back(kGlue[lang][(i + 2) % kGlueWords]);
    return tokens;
}

std::string decorate(const std::vector<std::string>& tokens, int i) {
    std::string text = crisis::join(tokens, " ");
    if (i % 5 == 0) text = "@rescueteam " + text;
    if (i % 4 == 0) text += "!";
    if (i % 7 == 0) text += " http://t.co/s" + std::to_string(i);
    return text;
}

std::string pivot_of(const std::vector<std::string>& tokens) {
    std::vector<std::string> en;
    en.reserve(tokens.size());
    for (const auto& t : tokens) en.push_back(english_of(t));
    return crisis::join(en, " ");
}

}  // namespace

crisis::Corpus make_corpus(const WorldOptions& options) {
    crisis::Corpus corpus;
    for (int l = 0; l < 3; ++l) {
        for (int d = 0; d < 3; ++d) {
            for (int e = 1; e <= options.events_per_pair; ++e) {
                std::string event_id =
                    concat(languages()[l], "_", domains()[d], "_", e);
                crisis::Event ev;
                ev.id = event_id;
                ev.name = concat("Synthetic ", event_id);
                ev.hazard_type = domains()[d];
                ev.hazard_category = d == 2 ? crisis::HazardCategory::HumanInduced
                                            : crisis::HazardCategory::Natural;
                ev.hazard_subcategory = d == 1 ? "hydrological" : "other";
                ev.temporal_development =
                    d == 1 ? crisis::TemporalDevelopment::Progressive
                           : crisis::TemporalDevelopment::Instantaneous;
                ev.geographic_spread = d == 1 ? crisis::GeographicSpread::Diffused
                                              : crisis::GeographicSpread::Focalized;
                ev.country = "Synthland";
                ev.year = 2014 + e;
                corpus.add_event(ev);

                // Event sizes vary with e and d so ranking scores differ.
                int related_n = options.related_per_event + e + d % 2;
                int not_related_n = options.not_related_per_event + (e + d) % 3;
                for (int kind = 0; kind < 2; ++kind) {
                    bool related = kind == 0;
                    int n = related ? related_n : not_related_n;
                    for (int i = 0; i < n; ++i) {
                        auto tokens = message_tokens(l, d, related, i);
                        crisis::Message m;
                        m.id = concat(event_id, related ? "_r" : "_n", i);
                        m.text = decorate(tokens, i);
                        m.language = languages()[l];
                        m.event_id = event_id;
                        m.label = related ? crisis::LabelClass::Related
                                          : crisis::LabelClass::NotRelated;
                        m.source_dataset = "synthetic";
                        m.original_label = related ? "related" : "not related";
                        m.has_location_meta = i % 3 == 0;
                        m.has_media_meta = i % 6 == 0;
                        if (l != 0 && i % 2 == 0) m.translated_text = pivot_of(tokens);
                        corpus.add_message(std::move(m));
                    }
                }
            }
        }
    }
    (void)options.seed;
    return corpus;
}

Eigen::RowVectorXd hash_vector(const std::string& key, int dim, uint64_t salt) {
    crisis::Rng rng(crisis::derive_seed(crisis::fnv1a64(key), salt));
    Eigen::RowVectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = rng.gauss();
    return v;
}

std::vector<std::pair<std::string, std::string>> vocabulary_pairs(
    const std::string& source, const std::string& target) {
    int s = lang_index(source), t = lang_index(target);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::set<std::string> seen;
    auto push = [&](const std::string& from, const std::string& to) {
        if (seen.insert(from).second) pairs.emplace_back(from, to);
    };
    for (int d = 0; d < 3; ++d)
        for (int w = 0; w < kDomainWords; ++w)
            push(kRelated[s][d][w], kRelated[t][d][w]);
    for (int w = 0; w < kOffWords; ++w) push(kUnrelated[s][w], kUnrelated[t][w]);
    for (int w = 0; w < kGlueWords; ++w) push(kGlue[s][w], kGlue[t][w]);
    return pairs;
}

namespace {

constexpr uint64_t kGloveSalt = 101;
constexpr uint64_t kMuseSalt = 202;
constexpr uint64_t kMuseNoiseSalt = 203;

std::map<std::string, Eigen::RowVectorXd> glove_vocabulary() {
    std::map<std::string, Eigen::RowVectorXd> entries;
    for (int d = 0; d < 3; ++d)
        for (int w = 0; w < kDomainWords; ++w)
            entries[kRelated[0][d][w]] =
                hash_vector(kRelated[0][d][w], 100, kGloveSalt);
    for (int w = 0; w < kOffWords; ++w)
        entries[kUnrelated[0][w]] = hash_vector(kUnrelated[0][w], 100, kGloveSalt);
    for (int w = 0; w < kGlueWords; ++w)
        entries[kGlue[0][w]] = hash_vector(kGlue[0][w], 100, kGloveSalt);
    return entries;
}

std::map<std::string, Eigen::RowVectorXd> muse_vocabulary(int lang) {
    std::map<std::string, Eigen::RowVectorXd> entries;
    auto aligned = [&](const std::string& token) {
        Eigen::RowVectorXd v = hash_vector(english_of(token), 300, kMuseSalt);
        if (lang != 0) v += 0.05 * hash_vector(token, 300, kMuseNoiseSalt);
        return v;
    };
    for (int d = 0; d < 3; ++d)
        for (int w = 0; w < kDomainWords; ++w)
            entries[kRelated[lang][d][w]] = aligned(kRelated[lang][d][w]);
    for (int w = 0; w < kOffWords; ++w)
        entries[kUnrelated[lang][w]] = aligned(kUnrelated[lang][w]);
    for (int w = 0; w < kGlueWords; ++w)
        entries[kGlue[lang][w]] = aligned(kGlue[lang][w]);
    return entries;
}

Eigen::MatrixXd cache_rows(const std::string& model, const crisis::Message& m) {
    Eigen::RowVectorXd v = 0.7 * hash_vector(concat(model, "#", m.id), 768,
                                             crisis::fnv1a64(model));
    double shift = m.label == crisis::LabelClass::Related ? 1.8 : -1.8;
    v.segment(0, 24).array() += shift;
    // Every fifth message becomes a token matrix with one zero padding row.
    uint64_t pick = crisis::fnv1a64(m.id) % 5;
    if (pick != 0) return v;
    Eigen::MatrixXd rows(4, 768);
    for (int r = 0; r < 3; ++r)
        rows.row(r) =
            v + 0.1 * hash_vector(concat(model, "#", m.id, "#", r), 768, 77);
    rows.row(3).setZero();
    return rows;
}

void write_vector_file(const std::string& path,
                       const std::map<std::string, Eigen::RowVectorXd>& entries) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& [token, v] : entries) {
        out << token;
        for (int i = 0; i < v.size(); ++i) out << ' ' << crisis::format_double(v(i));
        out << '\n';
    }
}

void write_cache_file(const std::string& path, const std::string& model,
                      const crisis::ContextualCache& cache,
                      const crisis::Corpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& m : corpus.messages()) {
        const Eigen::MatrixXd& rows = cache.raw(m.id);
        crisis::json j;
        j["id"] = m.id;
        j["model"] = model;
        if (rows.rows() == 1) {
            crisis::json v = crisis::json::array();
            for (int i = 0; i < rows.cols(); ++i) v.push_back(rows(0, i));
            j["vector"] = std::move(v);
        } else {
            crisis::json mat = crisis::json::array();
            for (int r = 0; r < rows.rows(); ++r) {
                crisis::json v = crisis::json::array();
                for (int i = 0; i < rows.cols(); ++i) v.push_back(rows(r, i));
                mat.push_back(std::move(v));
            }
            j["matrix"] = std::move(mat);
        }
        out << j.dump() << '\n';
    }
}

void write_dictionary(const std::string& path, const std::string& source,
                      const std::string& target) {
    std::ofstream out(path, std::ios::binary);
    out << "source_token,target_token\n";
    for (const auto& [from, to] : vocabulary_pairs(source, target))
        out << from << ',' << to << '\n';
}

}  // namespace

Resources::Resources(const crisis::Corpus& corpus) {
    glove_entries_ = glove_vocabulary();
    std::vector<std::pair<std::string, Eigen::RowVectorXd>> flat(
        glove_entries_.begin(), glove_entries_.end());
    glove_ = crisis::VectorTable::from_entries(flat);
    glove_.set_name("glove_synth");

    for (int l = 0; l < 3; ++l) {
        const std::string& code = languages()[l];
        muse_entries_[code] = muse_vocabulary(l);
        std::vector<std::pair<std::string, Eigen::RowVectorXd>> rows(
            muse_entries_[code].begin(), muse_entries_[code].end());
        auto table = crisis::VectorTable::from_entries(rows);
        table.set_name(concat("muse_", code));
        muse_.emplace(code, std::move(table));
    }

    mbert_.set_model("mbert");
    mt_bert_.set_model("mt_bert");
    xlm_r_.set_model("xlm_r");
    for (const auto& m : corpus.messages()) {
        mbert_.put(m.id, cache_rows("mbert", m));
        mt_bert_.put(m.id, cache_rows("mt_bert", m));
        xlm_r_.put(m.id, cache_rows("xlm_r", m));
    }

    for (const auto& source : {"es", "it"})
        for (const auto& [from, to] : vocabulary_pairs(source, "en"))
            translator_.add_entry(source, "en", from, to);
    for (const auto& target : {"es", "it"})
        for (const auto& [from, to] : vocabulary_pairs("en", target))
            translator_.add_entry("en", target, from, to);

    schema_ = crisis::FeatureSchema::v1();

    view_.glove = &glove_;
    for (auto& [code, table] : muse_) view_.muse[code] = &table;
    view_.mbert = &mbert_;
    view_.mt_bert = &mt_bert_;
    view_.xlm_r = &xlm_r_;
    view_.translator = &translator_;
    view_.annotators = &crisis::default_annotators();
    view_.schema = &schema_;
}

const crisis::ContextualCache& Resources::cache(const std::string& model) const {
    if (model == "mbert") return mbert_;
    if (model == "mt_bert") return mt_bert_;
    if (model == "xlm_r") return xlm_r_;
    throw std::invalid_argument(concat("unknown cache model: ", model));
}

std::string Resources::write_fixture(const crisis::Corpus& corpus,
                                     const std::string& dir) const {
    fs::create_directories(dir);
    fs::create_directories(fs::path(dir) / "dict");

    std::string corpus_path = (fs::path(dir) / "corpus.jsonl").string();
    crisis::save_corpus(corpus, corpus_path, crisis::CorpusFormat::UnifiedJsonLines);

    write_vector_file((fs::path(dir) / "glove.txt").string(), glove_entries_);
    for (const auto& [code, entries] : muse_entries_)
        write_vector_file((fs::path(dir) / concat("muse_", code, ".txt")).string(),
                          entries);
    write_cache_file((fs::path(dir) / "mbert.jsonl").string(), "mbert", mbert_,
                     corpus);
    write_cache_file((fs::path(dir) / "mt_bert.jsonl").string(), "mt_bert", mt_bert_,
                     corpus);
    write_cache_file((fs::path(dir) / "xlm_r.jsonl").string(), "xlm_r", xlm_r_,
                     corpus);
    for (const auto& source : {"es", "it"})
        write_dictionary((fs::path(dir) / "dict" / concat(source, "_en.csv")).string(),
                         source, "en");
    for (const auto& target : {"es", "it"})
        write_dictionary((fs::path(dir) / "dict" / concat("en_", target, ".csv")).string(),
                         "en", target);

    crisis::json config;
    config["corpus"] = "corpus.jsonl";
    config["seed"] = 40;
    config["repeats"] = 2;
    config["workers"] = 1;
    config["resources"] = {
        {"glove", "glove.txt"},
        {"muse", {{"en", "muse_en.txt"}, {"es", "muse_es.txt"}, {"it", "muse_it.txt"}}},
        {"mbert", "mbert.jsonl"},
        {"mt_bert", "mt_bert.jsonl"},
        {"xlm_r", "xlm_r.jsonl"},
        {"dictionary_dir", "dict"},
    };
    config["grid"] = {
        {"kinds", {"monolingual_monodomain", "cross_lingual_multidomain"}},
        {"representations", {"lf", "muse"}},
        {"targets", {"es/earthquake"}},
    };
    std::string config_path = (fs::path(dir) / "config.json").string();
    crisis::write_file(config_path, config.dump(2) + "\n");
    return config_path;
}

std::string scratch_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / concat("crisisxfer_", tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

}  // namespace synth
