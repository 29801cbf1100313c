#pragma once

#include <map>
#include <string>
#include <vector>

namespace crisis {

struct LanguageGuess {
    std::string code;   // ISO 639-1
    double confidence;  // in [0, 1]
};

// Character-trigram frequency profile for one language, built from seed text.
// Words are padded with '_' so boundary trigrams carry signal.
class LanguageProfile {
public:
    static LanguageProfile build(const std::string& code, const std::string& seed_text);

    const std::string& code() const { return code_; }

    // Cosine similarity between this profile and the text's trigram counts.
    double score(const std::map<std::string, double>& text_trigrams,
                 double text_norm) const;

private:
    std::string code_;
    std::map<std::string, double> freqs_;  // normalized trigram frequencies
    double norm_ = 0.0;
};

class LanguageProfileSet {
public:
    // Reads every "<code>.txt" seed file in a directory.
    static LanguageProfileSet load_dir(const std::string& dir);

    void add(LanguageProfile profile);
    bool empty() const { return profiles_.empty(); }
    size_t size() const { return profiles_.size(); }

private:
    friend LanguageGuess detect_language(const std::string&, const LanguageProfileSet&);
    std::vector<LanguageProfile> profiles_;  // kept sorted by code
};

// Collapses text to lowercase letters and spaces; URLs, mentions, digits and
// punctuation carry no language signal.
std::string clean_for_detection(const std::string& text);

// Highest-scoring profile wins; ties break by lexicographic code order.
// Throws "insufficient signal" when fewer than 3 characters survive cleanup.
LanguageGuess detect_language(const std::string& text, const LanguageProfileSet& profiles);

}  // namespace crisis
