#include "crisis/embed.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "crisis/common.hpp"
#include "crisis/io.hpp"
#include "crisis/translate.hpp"

namespace crisis {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool parse_double(const std::string& s, double& value) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end;
}

bool is_integer_field(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// VectorTable
// ---------------------------------------------------------------------------

VectorTable VectorTable::load(const std::string& path, std::optional<int> expected_dims,
                              std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error(concat("cannot open word vector file: ", path));
    }

    std::vector<std::pair<std::string, std::vector<double>>> entries;
    std::map<std::string, int> index;
    int dim = expected_dims.value_or(-1);
    std::string line;
    std::size_t lineno = 0;
    std::size_t skipped = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_ws(line);
        if (first_content_line) {
            first_content_line = false;
            // Optional "<count> <dim>" header.
            if (fields.size() == 2 && is_integer_field(fields[0]) &&
                is_integer_field(fields[1])) {
                int header_dim = std::stoi(fields[1]);
                if (dim >= 0 && header_dim != dim) {
                    throw std::runtime_error(concat("word vector file ", path,
                                                    " line ", lineno, ": expected ",
                                                    dim, " dimensions, found ",
                                                    header_dim));
                }
                dim = header_dim;
                continue;
            }
        }
        if (fields.size() < 2) {
            throw std::runtime_error(concat("word vector file ", path, " line ", lineno,
                                            ": expected token and values"));
        }
        const std::string& token = fields[0];
        int found = static_cast<int>(fields.size()) - 1;
        if (dim < 0) {
            dim = found;
        } else if (found != dim) {
            // Published vector dumps contain the odd ragged row (tokens with
            // embedded whitespace); those are skipped, not fatal.
            ++skipped;
            if (warnings != nullptr) {
                warnings->push_back(concat("line ", lineno, ": expected ", dim,
                                           " dimensions, found ", found,
                                           "; row skipped"));
            }
            continue;
        }
        if (index.count(token) != 0) {
            if (warnings != nullptr) {
                warnings->push_back(concat("duplicate token '", token, "' at line ",
                                           lineno, " ignored (first entry kept)"));
            }
            continue;
        }
        std::vector<double> values(dim);
        for (int d = 0; d < dim; ++d) {
            if (!parse_double(fields[d + 1], values[d])) {
                throw std::runtime_error(concat("word vector file ", path, " line ",
                                                lineno, ": bad number '", fields[d + 1],
                                                "'"));
            }
        }
        index.emplace(token, static_cast<int>(entries.size()));
        entries.emplace_back(token, std::move(values));
    }

    // Every row skipped means the width expectation itself is wrong.
    if (entries.empty() && skipped > 0) {
        throw std::runtime_error(concat("word vector file ", path, ": no row has the ",
                                        "expected width of ", dim));
    }

    VectorTable table;
    table.name_ = path;
    std::size_t slash = path.find_last_of('/');
    if (slash != std::string::npos) table.name_ = path.substr(slash + 1);
    table.index_ = std::move(index);
    table.rows_.resize(static_cast<Eigen::Index>(entries.size()), std::max(dim, 0));
    for (std::size_t r = 0; r < entries.size(); ++r) {
        for (int d = 0; d < dim; ++d) {
            table.rows_(static_cast<Eigen::Index>(r), d) = entries[r].second[d];
        }
    }
    return table;
}

VectorTable VectorTable::from_entries(
    const std::vector<std::pair<std::string, Eigen::RowVectorXd>>& entries) {
    VectorTable table;
    int dim = entries.empty() ? 0 : static_cast<int>(entries.front().second.size());
    table.rows_.resize(static_cast<Eigen::Index>(entries.size()), dim);
    int row = 0;
    for (const auto& [token, vec] : entries) {
        if (vec.size() != dim) {
            throw std::invalid_argument("vector table entries must share one width");
        }
        if (table.index_.count(token) != 0) continue;
        table.index_.emplace(token, row);
        table.rows_.row(row) = vec;
        ++row;
    }
    table.rows_.conservativeResize(row, dim);
    return table;
}

std::optional<int> VectorTable::row_of(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Eigen::RowVectorXd VectorTable::vector_of(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) {
        throw std::out_of_range(concat("token not in vector table: ", token));
    }
    return rows_.row(it->second);
}

Eigen::VectorXd embed_mean(const std::vector<std::string>& tokens,
                           const VectorTable& table,
                           bool include_oov_in_denominator) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(table.dim());
    int denom = 0;
    int found = 0;
    for (const std::string& t : tokens) {
        ++denom;
        std::optional<int> row = table.row_of(t);
        if (row.has_value()) {
            sum += table.vector_of(t).transpose();
            ++found;
        }
    }
    if (!include_oov_in_denominator) denom = found;
    if (denom == 0) return Eigen::VectorXd::Zero(table.dim());
    return sum / static_cast<double>(denom);
}

// ---------------------------------------------------------------------------
// ContextualCache
// ---------------------------------------------------------------------------

ContextualCache ContextualCache::load(const std::string& path,
                                      const std::string& model_name) {
    ContextualCache cache;
    cache.model_ = model_name;
    for_each_jsonl(path, [&](const json& record, std::size_t lineno) {
        auto fail = [&](const std::string& why) {
            throw std::runtime_error(
                concat("contextual cache ", path, " line ", lineno, ": ", why));
        };
        if (!record.is_object() || !record.contains("id") || !record.contains("model")) {
            fail("record must carry id and model");
        }
        std::string id = record.at("id").get<std::string>();
        std::string model = record.at("model").get<std::string>();
        if (model != model_name) {
            fail(concat("model '", model, "' does not match requested '", model_name,
                        "'"));
        }
        Eigen::MatrixXd rows;
        if (record.contains("vector")) {
            const json& v = record.at("vector");
            if (!v.is_array() || v.empty()) fail("vector must be a non-empty array");
            rows.resize(1, static_cast<Eigen::Index>(v.size()));
            for (std::size_t d = 0; d < v.size(); ++d) {
                rows(0, static_cast<Eigen::Index>(d)) = v[d].get<double>();
            }
        } else if (record.contains("matrix")) {
            const json& m = record.at("matrix");
            if (!m.is_array() || m.empty() || !m[0].is_array()) {
                fail("matrix must be a non-empty array of rows");
            }
            std::size_t width = m[0].size();
            rows.resize(static_cast<Eigen::Index>(m.size()),
                        static_cast<Eigen::Index>(width));
            for (std::size_t r = 0; r < m.size(); ++r) {
                if (!m[r].is_array() || m[r].size() != width) {
                    fail("matrix rows must share one width");
                }
                for (std::size_t d = 0; d < width; ++d) {
                    rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) =
                        m[r][d].get<double>();
                }
            }
        } else {
            fail("record must carry a vector or a matrix");
        }
        if (cache.dim_ == 0) {
            cache.dim_ = static_cast<int>(rows.cols());
        } else if (static_cast<int>(rows.cols()) != cache.dim_) {
            fail(concat("expected width ", cache.dim_, ", found ", rows.cols()));
        }
        if (cache.entries_.count(id) != 0) {
            fail(concat("duplicate id '", id, "'"));
        }
        cache.entries_.emplace(std::move(id), std::move(rows));
    });
    return cache;
}

void ContextualCache::put(const std::string& id, const Eigen::MatrixXd& rows) {
    if (dim_ == 0) dim_ = static_cast<int>(rows.cols());
    entries_[id] = rows;
}

const Eigen::MatrixXd& ContextualCache::raw(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        throw std::out_of_range(concat("no cached vector for message '", id,
                                       "' under model '", model_, "'"));
    }
    return it->second;
}

Eigen::VectorXd pool_contextual(const ContextualCache& cache, const std::string& id) {
    const Eigen::MatrixXd& rows = cache.raw(id);
    if (rows.rows() == 1) return rows.row(0).transpose();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(rows.cols());
    int used = 0;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        if (rows.row(r).isZero(0.0)) continue;  // padding rows carry no content
        sum += rows.row(r).transpose();
        ++used;
    }
    if (used == 0) return Eigen::VectorXd::Zero(rows.cols());
    return sum / static_cast<double>(used);
}

// ---------------------------------------------------------------------------
// Representations
// ---------------------------------------------------------------------------

std::string representation_name(Representation rep) {
    switch (rep) {
        case Representation::LF: return "lf";
        case Representation::MtGlove: return "mt_glove";
        case Representation::Muse: return "muse";
        case Representation::MuseLf: return "muse_lf";
        case Representation::MBert: return "mbert";
        case Representation::MtBert: return "mt_bert";
        case Representation::XlmR: return "xlm_r";
    }
    throw std::logic_error("unreachable representation");
}

Representation parse_representation(const std::string& name) {
    for (Representation rep : kAllRepresentations) {
        if (representation_name(rep) == name) return rep;
    }
    throw std::invalid_argument(concat("unknown representation name: ", name));
}

int representation_width(Representation rep) {
    switch (rep) {
        case Representation::LF: return FeatureSchema::kFeatureCount;
        case Representation::MtGlove: return 100;
        case Representation::Muse: return 300;
        case Representation::MuseLf: return 300 + FeatureSchema::kFeatureCount;
        case Representation::MBert: return 768;
        case Representation::MtBert: return 768;
        case Representation::XlmR: return 768;
    }
    throw std::logic_error("unreachable representation");
}

namespace {

std::vector<std::string> numbered_names(const std::string& prefix, int width) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(width));
    for (int i = 0; i < width; ++i) names.push_back(concat(prefix, "_", i));
    return names;
}

// Pivot-language text for translation-based representations: English
// messages embed their raw text; other languages use the stored translation
// or fall back to the translation client. Messages with neither are
// collected and reported in one error.
std::vector<std::string> pivot_texts(const std::vector<Message>& messages,
                                     const EmbeddingResources& res) {
    std::vector<std::string> texts(messages.size());
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        const Message& m = messages[i];
        if (m.language == "en") {
            texts[i] = m.text;
        } else if (!m.translated_text.empty()) {
            texts[i] = m.translated_text;
        } else if (res.translator != nullptr) {
            texts[i] = res.translator->translate(m.text, m.language, "en");
        } else {
            missing.push_back(m.id);
        }
    }
    if (!missing.empty()) {
        throw std::runtime_error(
            concat("messages lack translated text and no translation client is "
                   "configured: ",
                   join(missing, ", ")));
    }
    return texts;
}

Eigen::VectorXd lf_row(const Message& m, const EmbeddingResources& res,
                       std::vector<std::string>* warnings) {
    const AnnotatorBundle& ann =
        res.annotators != nullptr ? *res.annotators : default_annotators();
    static const FeatureSchema default_schema = FeatureSchema::v1();
    const FeatureSchema& schema = res.schema != nullptr ? *res.schema : default_schema;
    return extract_linguistic_features(m, ann, schema, warnings);
}

Eigen::VectorXd muse_row(const Message& m, const EmbeddingResources& res) {
    auto it = res.muse.find(m.language);
    if (it == res.muse.end() || it->second == nullptr) {
        throw std::runtime_error(
            concat("no aligned vector table for language: ", m.language));
    }
    std::vector<std::string> tokens = tokenize(m.text, TokenNorm::Placeholdered).tokens;
    return embed_mean(tokens, *it->second, res.include_oov_in_mean);
}

const FeatureSchema& schema_of(const EmbeddingResources& res) {
    static const FeatureSchema default_schema = FeatureSchema::v1();
    return res.schema != nullptr ? *res.schema : default_schema;
}

}  // namespace

FeatureMatrix build_representation(const std::vector<Message>& messages,
                                   Representation rep,
                                   const EmbeddingResources& resources,
                                   std::vector<std::string>* warnings) {
    FeatureMatrix out;
    out.rep = rep;
    const int width = representation_width(rep);
    out.values.resize(static_cast<Eigen::Index>(messages.size()), width);

    switch (rep) {
        case Representation::LF:
            out.column_names = schema_of(resources).names();
            break;
        case Representation::MtGlove:
            out.column_names = numbered_names("mt_glove", width);
            break;
        case Representation::Muse:
            out.column_names = numbered_names("muse", width);
            break;
        case Representation::MuseLf: {
            out.column_names = numbered_names("muse", 300);
            const auto& lf_names = schema_of(resources).names();
            out.column_names.insert(out.column_names.end(), lf_names.begin(),
                                    lf_names.end());
            break;
        }
        case Representation::MBert:
            out.column_names = numbered_names("mbert", width);
            break;
        case Representation::MtBert:
            out.column_names = numbered_names("mt_bert", width);
            break;
        case Representation::XlmR:
            out.column_names = numbered_names("xlm_r", width);
            break;
    }

    auto require = [&](const void* ptr, const char* what) {
        if (ptr == nullptr) {
            throw std::runtime_error(concat("representation ",
                                            representation_name(rep), " needs ", what));
        }
    };

    std::vector<std::string> english;
    if (rep == Representation::MtGlove) {
        require(resources.glove, "an English word vector table");
        english = pivot_texts(messages, resources);
    }

    for (std::size_t i = 0; i < messages.size(); ++i) {
        const Message& m = messages[i];
        Eigen::VectorXd row;
        switch (rep) {
            case Representation::LF:
                row = lf_row(m, resources, warnings);
                break;
            case Representation::MtGlove: {
                std::vector<std::string> tokens =
                    tokenize(english[i], TokenNorm::Placeholdered).tokens;
                row = embed_mean(tokens, *resources.glove,
                                 resources.include_oov_in_mean);
                break;
            }
            case Representation::Muse:
                row = muse_row(m, resources);
                break;
            case Representation::MuseLf: {
                Eigen::VectorXd muse = muse_row(m, resources);
                Eigen::VectorXd lf = lf_row(m, resources, warnings);
                row.resize(muse.size() + lf.size());
                row << muse, lf;
                break;
            }
            case Representation::MBert:
                require(resources.mbert, "an mbert contextual cache");
                row = pool_contextual(*resources.mbert, m.id);
                break;
            case Representation::MtBert:
                require(resources.mt_bert, "an mt_bert contextual cache");
                row = pool_contextual(*resources.mt_bert, m.id);
                break;
            case Representation::XlmR:
                require(resources.xlm_r, "an xlm_r contextual cache");
                row = pool_contextual(*resources.xlm_r, m.id);
                break;
        }
        if (row.size() != width) {
            throw std::runtime_error(concat("representation ", representation_name(rep),
                                            " produced width ", row.size(),
                                            " for message ", m.id, ", expected ",
                                            width));
        }
        out.values.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return out;
}

void save_matrix_csv(const FeatureMatrix& matrix, const std::vector<Message>& messages,
                     const std::string& path) {
    if (static_cast<Eigen::Index>(messages.size()) != matrix.values.rows()) {
        throw std::invalid_argument("matrix rows and messages must align");
    }
    std::ostringstream out;
    std::vector<std::string> header = {"id", "label"};
    header.insert(header.end(), matrix.column_names.begin(), matrix.column_names.end());
    write_csv_row(out, header);
    for (std::size_t i = 0; i < messages.size(); ++i) {
        std::vector<std::string> row = {messages[i].id, label_name(messages[i].label)};
        for (Eigen::Index c = 0; c < matrix.values.cols(); ++c) {
            row.push_back(format_double(matrix.values(static_cast<Eigen::Index>(i), c)));
        }
        write_csv_row(out, row);
    }
    write_file(path, out.str());
}

}  // namespace crisis
