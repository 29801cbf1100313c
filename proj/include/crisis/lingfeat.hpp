#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "crisis/corpus.hpp"

namespace crisis {

enum class TokenNorm { Raw, Placeholdered };

struct TokenSequence {
    std::vector<std::string> tokens;
    TokenNorm normalization = TokenNorm::Raw;
};

// Whitespace/punctuation-aware tweet tokenizer. Placeholdered mode lowercases,
// maps URLs to "<url>" and mentions to "<user>", and strips a leading RT
// marker; hashtags stay whole ("#flood").
TokenSequence tokenize(const std::string& text, TokenNorm mode);

bool is_punct_token(const std::string& token);

// ---------------------------------------------------------------------------
// Feature schema: 48 names in a fixed order per version.
// ---------------------------------------------------------------------------

class FeatureSchema {
public:
    static constexpr int kFeatureCount = 48;

    static FeatureSchema v1();
    static FeatureSchema load(const std::string& path);  // versioned data file
    void save(const std::string& path) const;

    const std::vector<std::string>& names() const { return names_; }
    const std::string& version() const { return version_; }
    int index(const std::string& name) const;

private:
    std::vector<std::string> names_;
    std::vector<std::string> types_;  // count | ratio | binary | polarity
    std::string version_;
};

// ---------------------------------------------------------------------------
// Pluggable language-specific annotators. A nullopt result means the
// annotator cannot handle the language; the extractor substitutes the
// neutral value 0 and records a warning.
// ---------------------------------------------------------------------------

struct SentimentResult {
    double polarity = 0.0;  // in [-1, 1]
    int positive_count = 0;
    int negative_count = 0;
};

struct NerCounts {
    int person = 0;
    int location = 0;
    int organization = 0;
    int total = 0;  // categorized hits plus uncategorized capitalized tokens
};

// Coarse 12-tag set; order is the feature order.
enum PosTag { kNoun, kVerb, kAdj, kAdv, kPron, kDet, kAdp, kNum, kConj, kPart, kPunct, kX };
constexpr int kPosTagCount = 12;
using PosCounts = std::array<int, kPosTagCount>;

struct AnnotatorBundle {
    std::function<std::optional<SentimentResult>(const std::string& text,
                                                 const std::string& language)>
        sentiment;
    std::function<std::optional<NerCounts>(const std::string& text,
                                           const std::string& language)>
        ner;
    std::function<std::optional<PosCounts>(const std::string& text,
                                           const std::string& language)>
        pos;
};

// Rule/lexicon annotators for en, es and it; other languages report failure.
const AnnotatorBundle& default_annotators();

// Language-specific token sets used by the lexical features (empty set for
// unsupported languages).
const std::vector<std::string>& stopwords_for(const std::string& language);
const std::vector<std::string>& first_person_pronouns_for(const std::string& language);

Eigen::VectorXd extract_linguistic_features(const Message& message,
                                            const AnnotatorBundle& annotators,
                                            const FeatureSchema& schema,
                                            std::vector<std::string>* warnings = nullptr);

}  // namespace crisis
