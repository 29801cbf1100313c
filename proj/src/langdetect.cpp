#include "crisis/langdetect.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "crisis/common.hpp"
#include "crisis/io.hpp"

namespace crisis {

namespace {

bool is_letter_cp(char32_t cp) {
    if ((cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z')) return true;
    // Latin-1 supplement letters plus Latin Extended-A
    if (cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7) return true;
    return false;
}

bool is_space_cp(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == 0xA0;
}

// Trigram counts over '_'-padded words of the cleaned text.
std::map<std::string, double> trigram_counts(const std::string& cleaned) {
    std::map<std::string, double> counts;
    for (const std::string& word : split(cleaned, ' ')) {
        if (word.empty()) continue;
        std::string padded = "_" + word + "_";
        auto cps = utf8_decode(padded);
        if (cps.size() < 3) continue;
        for (size_t i = 0; i + 3 <= cps.size(); ++i) {
            std::string tri;
            utf8_append(tri, cps[i]);
            utf8_append(tri, cps[i + 1]);
            utf8_append(tri, cps[i + 2]);
            counts[tri] += 1.0;
        }
    }
    return counts;
}

double l2_norm(const std::map<std::string, double>& v) {
    double s = 0.0;
    for (const auto& [_, x] : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

std::string clean_for_detection(const std::string& text) {
    std::string out;
    bool last_space = true;
    auto cps = utf8_decode(text);
    size_t i = 0;
    while (i < cps.size()) {
        char32_t cp = cps[i];
        // drop URLs and mentions wholesale
        if (cp == U'@' || cp == U'#') {
            ++i;
            while (i < cps.size() && !is_space_cp(cps[i])) ++i;
            continue;
        }
        if (cp == U'h' || cp == U'H' || cp == U'w' || cp == U'W') {
            // peek for http:// / https:// / www.
            std::string peek;
            for (size_t j = i; j < cps.size() && j < i + 8; ++j)
                utf8_append(peek, lower_cp(cps[j]));
            if (peek.rfind("http://", 0) == 0 || peek.rfind("https://", 0) == 0 ||
                peek.rfind("www.", 0) == 0) {
                while (i < cps.size() && !is_space_cp(cps[i])) ++i;
                continue;
            }
        }
        if (is_letter_cp(cp)) {
            utf8_append(out, lower_cp(cp));
            last_space = false;
        } else if (!last_space) {
            out += ' ';
            last_space = true;
        }
        ++i;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

LanguageProfile LanguageProfile::build(const std::string& code,
                                       const std::string& seed_text) {
    LanguageProfile p;
    p.code_ = code;
    auto counts = trigram_counts(clean_for_detection(seed_text));
    double total = 0.0;
    for (const auto& [_, c] : counts) total += c;
    if (total > 0)
        for (auto& [_, c] : counts) c /= total;
    p.freqs_ = std::move(counts);
    p.norm_ = l2_norm(p.freqs_);
    return p;
}

double LanguageProfile::score(const std::map<std::string, double>& text_trigrams,
                              double text_norm) const {
    if (norm_ == 0.0 || text_norm == 0.0) return 0.0;
    double dot = 0.0;
    // iterate the smaller map
    const auto& small = text_trigrams.size() < freqs_.size() ? text_trigrams : freqs_;
    const auto& large = text_trigrams.size() < freqs_.size() ? freqs_ : text_trigrams;
    for (const auto& [tri, x] : small) {
        auto it = large.find(tri);
        if (it != large.end()) dot += x * it->second;
    }
    return dot / (norm_ * text_norm);
}

LanguageProfileSet LanguageProfileSet::load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    LanguageProfileSet set;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        std::string code = path.stem().string();
        set.add(LanguageProfile::build(code, read_file(path.string())));
    }
    if (set.empty())
        throw std::runtime_error(concat("no language profiles found in ", dir));
    return set;
}

void LanguageProfileSet::add(LanguageProfile profile) {
    profiles_.push_back(std::move(profile));
    std::sort(profiles_.begin(), profiles_.end(),
              [](const LanguageProfile& a, const LanguageProfile& b) {
                  return a.code() < b.code();
              });
}

LanguageGuess detect_language(const std::string& text,
                              const LanguageProfileSet& profiles) {
    if (profiles.empty()) throw std::runtime_error("no language profiles loaded");
    std::string cleaned = clean_for_detection(text);
    std::string compact;
    for (char c : cleaned)
        if (c != ' ') compact += c;
    if (utf8_length(compact) < 3)
        throw std::runtime_error("insufficient signal: text shorter than 3 characters "
                                 "after cleanup");

    auto trigrams = trigram_counts(cleaned);
    double norm = l2_norm(trigrams);

    LanguageGuess best{"", -1.0};
    for (const LanguageProfile& p : profiles.profiles_) {
        double s = p.score(trigrams, norm);
        if (s > best.confidence) best = {p.code(), s};
        // profiles_ is code-sorted, so strict > keeps the lexicographic winner on ties
    }
    if (best.confidence < 0.0) best.confidence = 0.0;
    if (best.confidence > 1.0) best.confidence = 1.0;
    return best;
}

}  // namespace crisis
