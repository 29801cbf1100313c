#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crisis/corpus.hpp"
#include "crisis/lingfeat.hpp"

namespace crisis {

class TranslationClient;

// ---------------------------------------------------------------------------
// Static word vectors (GloVe-style text format, optional "N D" header line).
// ---------------------------------------------------------------------------

class VectorTable {
public:
    static VectorTable load(const std::string& path,
                            std::optional<int> expected_dims = std::nullopt,
                            std::vector<std::string>* warnings = nullptr);

    int dim() const { return static_cast<int>(rows_.cols()); }
    std::size_t size() const { return index_.size(); }
    const std::string& name() const { return name_; }
    void set_name(const std::string& name) { name_ = name; }
    std::optional<int> row_of(const std::string& token) const;
    Eigen::RowVectorXd vector_of(const std::string& token) const;  // throws on miss

    // Test support: build a table in memory.
    static VectorTable from_entries(
        const std::vector<std::pair<std::string, Eigen::RowVectorXd>>& entries);

private:
    std::string name_;
    std::map<std::string, int> index_;
    Eigen::MatrixXd rows_;
};

inline VectorTable load_word_vectors(const std::string& path, int expected_dims,
                                     std::vector<std::string>* warnings = nullptr) {
    return VectorTable::load(path, expected_dims, warnings);
}

// Mean of the token vectors. Out-of-vocabulary tokens contribute a zero
// vector; when include_oov_in_denominator is false they are dropped from the
// average instead. An empty token list yields the zero vector.
Eigen::VectorXd embed_mean(const std::vector<std::string>& tokens,
                           const VectorTable& table,
                           bool include_oov_in_denominator = true);

// ---------------------------------------------------------------------------
// Precomputed contextual encodings keyed by message id.
// ---------------------------------------------------------------------------

class ContextualCache {
public:
    // JSONL records: {"id": ..., "model": ..., "vector": [...]} or
    // {"id": ..., "model": ..., "matrix": [[...], ...]} (one row per token).
    static ContextualCache load(const std::string& path, const std::string& model_name);

    const std::string& model_name() const { return model_; }
    int dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    bool contains(const std::string& id) const { return entries_.count(id) != 0; }

    // Test support.
    void put(const std::string& id, const Eigen::MatrixXd& rows);
    void set_model(const std::string& model) { model_ = model; }

    const Eigen::MatrixXd& raw(const std::string& id) const;

private:
    std::string model_;
    int dim_ = 0;
    std::map<std::string, Eigen::MatrixXd> entries_;
};

// Sentence vector for one message: a cached vector is returned as is; a
// cached token matrix is mean-pooled over its non-zero rows (all-zero rows
// are padding). Missing ids raise an error naming the id and the model.
Eigen::VectorXd pool_contextual(const ContextualCache& cache, const std::string& id);

// ---------------------------------------------------------------------------
// Message representations.
// ---------------------------------------------------------------------------

enum class Representation { LF, MtGlove, Muse, MuseLf, MBert, MtBert, XlmR };

constexpr Representation kAllRepresentations[] = {
    Representation::LF,    Representation::MtGlove, Representation::Muse,
    Representation::MuseLf, Representation::MBert,  Representation::MtBert,
    Representation::XlmR};

std::string representation_name(Representation rep);
Representation parse_representation(const std::string& name);  // throws on unknown
int representation_width(Representation rep);

struct EmbeddingResources {
    const VectorTable* glove = nullptr;  // English vectors for translated text
    std::map<std::string, const VectorTable*> muse;  // language -> aligned table
    const ContextualCache* mbert = nullptr;
    const ContextualCache* mt_bert = nullptr;
    const ContextualCache* xlm_r = nullptr;
    TranslationClient* translator = nullptr;      // fallback for missing translations
    const AnnotatorBundle* annotators = nullptr;  // defaults when null
    const FeatureSchema* schema = nullptr;        // v1 when null
    bool include_oov_in_mean = true;
};

struct FeatureMatrix {
    Eigen::MatrixXd values;  // one row per message
    Representation rep = Representation::LF;
    std::vector<std::string> column_names;
};

FeatureMatrix build_representation(const std::vector<Message>& messages,
                                   Representation rep,
                                   const EmbeddingResources& resources,
                                   std::vector<std::string>* warnings = nullptr);

// CSV export: header "id,label,<column names>".
void save_matrix_csv(const FeatureMatrix& matrix, const std::vector<Message>& messages,
                     const std::string& path);

}  // namespace crisis
