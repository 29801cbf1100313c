#include "crisis/lingfeat.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "crisis/common.hpp"
#include "crisis/io.hpp"

namespace crisis {

namespace {

bool is_ascii_punct(char32_t cp) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
}

bool is_extended_punct(char32_t cp) {
    switch (cp) {
        case 0x00A1:  // inverted exclamation
        case 0x00BF:  // inverted question
        case 0x00AB:
        case 0x00BB:
        case 0x2013:
        case 0x2014:
        case 0x2018:
        case 0x2019:
        case 0x201A:
        case 0x201C:
        case 0x201D:
        case 0x201E:
        case 0x2026:
            return true;
        default:
            return false;
    }
}

bool is_punct_cp(char32_t cp) {
    if (cp == U'_') return false;  // word character in handles and hashtags
    return is_ascii_punct(cp) || is_extended_punct(cp);
}

bool is_letter_cp(char32_t cp) {
    if ((cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z')) return true;
    if (cp >= 0x00C0 && cp <= 0x024F && cp != 0x00D7 && cp != 0x00F7) return true;
    return false;
}

bool is_word_cp(char32_t cp) {
    return is_letter_cp(cp) || (cp >= U'0' && cp <= U'9') || cp == U'_';
}

bool is_space_cp(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == 0x00A0;
}

bool starts_with_ci(const std::u32string& s, std::size_t pos, const char* lit) {
    for (std::size_t i = 0; lit[i] != '\0'; ++i) {
        if (pos + i >= s.size()) return false;
        char32_t cp = s[pos + i];
        if (cp >= U'A' && cp <= U'Z') cp += 32;
        if (cp != static_cast<char32_t>(lit[i])) return false;
    }
    return true;
}

bool chunk_is_url(const std::u32string& chunk) {
    return starts_with_ci(chunk, 0, "http://") || starts_with_ci(chunk, 0, "https://") ||
           starts_with_ci(chunk, 0, "www.");
}

std::string cp_to_utf8(char32_t cp) {
    std::string out;
    utf8_append(out, cp);
    return out;
}

std::string range_to_utf8(const std::u32string& s, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) utf8_append(out, s[i]);
    return out;
}

// Apostrophes and hyphens between word characters stay inside the token
// ("don't", "e-mail"); everything else in the punctuation set splits.
bool splits_here(const std::u32string& s, std::size_t i) {
    char32_t cp = s[i];
    if (!is_punct_cp(cp)) return false;
    if (cp == U'\'' || cp == 0x2019 || cp == U'-') {
        bool prev_word = i > 0 && is_word_cp(s[i - 1]);
        bool next_word = i + 1 < s.size() && is_word_cp(s[i + 1]);
        if (prev_word && next_word) return false;
    }
    return true;
}

void emit_chunk_tokens(const std::u32string& chunk, TokenNorm mode,
                       std::vector<std::string>& out) {
    if (chunk.empty()) return;
    if (chunk_is_url(chunk)) {
        out.push_back(mode == TokenNorm::Placeholdered ? "<url>" : range_to_utf8(chunk, 0, chunk.size()));
        return;
    }
    std::size_t i = 0;
    const std::size_t n = chunk.size();
    while (i < n) {
        char32_t cp = chunk[i];
        bool handle_start = (cp == U'@' || cp == U'#') && i + 1 < n && is_word_cp(chunk[i + 1]);
        if (splits_here(chunk, i) && !handle_start) {
            out.push_back(cp_to_utf8(cp));
            ++i;
            continue;
        }
        std::size_t j = i;
        if (handle_start) {
            ++j;
            while (j < n && is_word_cp(chunk[j])) ++j;
        } else {
            while (j < n && !splits_here(chunk, j)) {
                // a fresh @ or # inside a run starts a new token only at a boundary
                ++j;
            }
        }
        std::string tok = range_to_utf8(chunk, i, j);
        if (mode == TokenNorm::Placeholdered) {
            if (cp == U'@' && handle_start) {
                tok = "<user>";
            } else {
                tok = utf8_lower(tok);
            }
        }
        out.push_back(std::move(tok));
        i = j;
    }
}

std::vector<std::u32string> whitespace_chunks(const std::string& text) {
    std::u32string cps = utf8_decode(text);
    std::vector<std::u32string> chunks;
    std::size_t i = 0;
    while (i < cps.size()) {
        while (i < cps.size() && is_space_cp(cps[i])) ++i;
        std::size_t j = i;
        while (j < cps.size() && !is_space_cp(cps[j])) ++j;
        if (j > i) chunks.push_back(cps.substr(i, j - i));
        i = j;
    }
    return chunks;
}

bool chunk_is_rt_marker(const std::u32string& chunk) {
    if (chunk.size() != 2) return false;
    char32_t a = chunk[0];
    char32_t b = chunk[1];
    if (a >= U'A' && a <= U'Z') a += 32;
    if (b >= U'A' && b <= U'Z') b += 32;
    return a == U'r' && b == U't';
}

}  // namespace

TokenSequence tokenize(const std::string& text, TokenNorm mode) {
    TokenSequence seq;
    seq.normalization = mode;
    std::vector<std::u32string> chunks = whitespace_chunks(text);
    std::size_t start = 0;
    if (mode == TokenNorm::Placeholdered && !chunks.empty() && chunk_is_rt_marker(chunks[0])) {
        start = 1;
    }
    for (std::size_t c = start; c < chunks.size(); ++c) {
        emit_chunk_tokens(chunks[c], mode, seq.tokens);
    }
    return seq;
}

bool is_punct_token(const std::string& token) {
    std::u32string cps = utf8_decode(token);
    if (cps.empty()) return false;
    for (char32_t cp : cps) {
        if (!is_punct_cp(cp)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// FeatureSchema
// ---------------------------------------------------------------------------

namespace {

struct SchemaEntry {
    const char* name;
    const char* type;
};

constexpr SchemaEntry kSchemaV1[FeatureSchema::kFeatureCount] = {
    {"char_count", "count"},
    {"word_count", "count"},
    {"avg_word_length", "ratio"},
    {"uppercase_char_ratio", "ratio"},
    {"digit_count", "count"},
    {"punctuation_count", "count"},
    {"question_mark_count", "count"},
    {"exclamation_mark_count", "count"},
    {"url_count", "count"},
    {"mention_count", "count"},
    {"hashtag_count", "count"},
    {"emoji_count", "count"},
    {"elongated_word_count", "count"},
    {"retweet_prefix", "binary"},
    {"has_url", "binary"},
    {"has_mention", "binary"},
    {"has_hashtag", "binary"},
    {"has_question_mark", "binary"},
    {"has_exclamation", "binary"},
    {"has_digits", "binary"},
    {"has_location", "binary"},
    {"has_media", "binary"},
    {"stopword_ratio", "ratio"},
    {"type_token_ratio", "ratio"},
    {"max_word_length", "count"},
    {"all_caps_word_count", "count"},
    {"first_person_pronoun_count", "count"},
    {"numeric_token_count", "count"},
    {"positive_word_count", "count"},
    {"negative_word_count", "count"},
    {"sentiment_polarity", "polarity"},
    {"ner_person_count", "count"},
    {"ner_location_count", "count"},
    {"ner_organization_count", "count"},
    {"ner_total_count", "count"},
    {"pos_noun_count", "count"},
    {"pos_verb_count", "count"},
    {"pos_adj_count", "count"},
    {"pos_adv_count", "count"},
    {"pos_pron_count", "count"},
    {"pos_det_count", "count"},
    {"pos_adp_count", "count"},
    {"pos_num_count", "count"},
    {"pos_conj_count", "count"},
    {"pos_part_count", "count"},
    {"pos_punct_count", "count"},
    {"pos_x_count", "count"},
    {"cleaned_token_count", "count"},
};

}  // namespace

FeatureSchema FeatureSchema::v1() {
    FeatureSchema schema;
    schema.version_ = "v1";
    schema.names_.reserve(kFeatureCount);
    schema.types_.reserve(kFeatureCount);
    for (const SchemaEntry& e : kSchemaV1) {
        schema.names_.emplace_back(e.name);
        schema.types_.emplace_back(e.type);
    }
    return schema;
}

FeatureSchema FeatureSchema::load(const std::string& path) {
    Table table = read_csv(path);
    int idx_col = -1, name_col = -1, type_col = -1, ver_col = -1;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == "index") idx_col = static_cast<int>(i);
        if (table.header[i] == "name") name_col = static_cast<int>(i);
        if (table.header[i] == "type") type_col = static_cast<int>(i);
        if (table.header[i] == "schema_version") ver_col = static_cast<int>(i);
    }
    if (name_col < 0 || type_col < 0 || ver_col < 0) {
        throw std::runtime_error(concat("feature schema file ", path,
                                        ": missing required columns"));
    }
    FeatureSchema schema;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (idx_col >= 0) {
            int want = static_cast<int>(r);
            if (std::stoi(row[idx_col]) != want) {
                throw std::runtime_error(concat("feature schema file ", path, ": row ",
                                                r + 2, " out of order"));
            }
        }
        schema.names_.push_back(row[name_col]);
        schema.types_.push_back(row[type_col]);
        if (schema.version_.empty()) {
            schema.version_ = row[ver_col];
        } else if (schema.version_ != row[ver_col]) {
            throw std::runtime_error(concat("feature schema file ", path,
                                            ": mixed schema versions"));
        }
    }
    if (static_cast<int>(schema.names_.size()) != kFeatureCount) {
        throw std::runtime_error(concat("feature schema file ", path, ": expected ",
                                        kFeatureCount, " features, found ",
                                        schema.names_.size()));
    }
    return schema;
}

void FeatureSchema::save(const std::string& path) const {
    std::ostringstream out;
    out << "index,name,type,schema_version\n";
    for (std::size_t i = 0; i < names_.size(); ++i) {
        write_csv_row(out, {std::to_string(i), names_[i], types_[i], version_});
    }
    write_file(path, out.str());
}

int FeatureSchema::index(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return static_cast<int>(i);
    }
    throw std::out_of_range(concat("unknown feature name: ", name));
}

// ---------------------------------------------------------------------------
// Feature extraction
// ---------------------------------------------------------------------------

namespace {

bool prev_is_word(const std::u32string& s, std::size_t pos) {
    return pos > 0 && is_word_cp(s[pos - 1]);
}

int count_urls(const std::u32string& s) {
    int n = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (prev_is_word(s, i)) continue;
        if (starts_with_ci(s, i, "http://") || starts_with_ci(s, i, "https://") ||
            starts_with_ci(s, i, "www.")) {
            ++n;
        }
    }
    return n;
}

int count_marker(const std::u32string& s, char32_t marker) {
    int n = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != marker) continue;
        if (prev_is_word(s, i)) continue;
        if (i + 1 < s.size() && is_word_cp(s[i + 1])) ++n;
    }
    return n;
}

bool is_emoji_cp(char32_t cp) {
    return (cp >= 0x1F300 && cp <= 0x1F5FF) || (cp >= 0x1F600 && cp <= 0x1F64F) ||
           (cp >= 0x1F680 && cp <= 0x1F6FF) || (cp >= 0x1F900 && cp <= 0x1F9FF) ||
           (cp >= 0x2600 && cp <= 0x27BF) || (cp >= 0x1FA70 && cp <= 0x1FAFF);
}

bool is_upper_cp(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return true;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return true;
    return false;
}

bool has_triple_repeat(const std::string& token) {
    std::u32string cps = utf8_decode(token);
    int run = 1;
    for (std::size_t i = 1; i < cps.size(); ++i) {
        run = (cps[i] == cps[i - 1]) ? run + 1 : 1;
        if (run >= 3) return true;
    }
    return false;
}

bool is_numeric_token(const std::string& token) {
    std::u32string cps = utf8_decode(token);
    if (cps.empty()) return false;
    bool saw_digit = false;
    bool prev_digit = false;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        char32_t cp = cps[i];
        if (cp >= U'0' && cp <= U'9') {
            saw_digit = true;
            prev_digit = true;
        } else if ((cp == U'.' || cp == U',') && prev_digit && i + 1 < cps.size()) {
            prev_digit = false;
        } else {
            return false;
        }
    }
    return saw_digit;
}

bool is_all_caps_word(const std::string& token) {
    std::u32string cps = utf8_decode(token);
    int letters = 0;
    for (char32_t cp : cps) {
        if (is_letter_cp(cp)) {
            if (!is_upper_cp(cp)) return false;
            ++letters;
        }
    }
    return letters >= 2;
}

void note_failure(std::vector<std::string>* warnings, const char* which,
                  const Message& message) {
    if (warnings == nullptr) return;
    warnings->push_back(concat(which, " annotator failed for language '",
                               message.language, "' on message ", message.id,
                               "; neutral 0 used"));
}

}  // namespace

Eigen::VectorXd extract_linguistic_features(const Message& message,
                                            const AnnotatorBundle& annotators,
                                            const FeatureSchema& schema,
                                            std::vector<std::string>* warnings) {
    if (static_cast<int>(schema.names().size()) != FeatureSchema::kFeatureCount) {
        throw std::invalid_argument("feature schema must hold exactly 48 features");
    }
    if (schema.version() != "v1") {
        throw std::invalid_argument(
            concat("unsupported feature schema version: ", schema.version()));
    }
    const std::string& text = message.text;
    std::u32string cps = utf8_decode(text);

    Eigen::VectorXd v = Eigen::VectorXd::Zero(FeatureSchema::kFeatureCount);
    auto set = [&](const char* name, double value) { v[schema.index(name)] = value; };

    TokenSequence placehold = tokenize(text, TokenNorm::Placeholdered);
    TokenSequence raw = tokenize(text, TokenNorm::Raw);

    std::vector<std::string> word_tokens;
    for (const std::string& t : placehold.tokens) {
        if (!is_punct_token(t)) word_tokens.push_back(t);
    }
    std::vector<std::string> raw_word_tokens;
    for (const std::string& t : raw.tokens) {
        if (!is_punct_token(t)) raw_word_tokens.push_back(t);
    }

    // Surface statistics.
    set("char_count", static_cast<double>(cps.size()));
    set("word_count", static_cast<double>(word_tokens.size()));
    double total_word_len = 0.0;
    double max_word_len = 0.0;
    for (const std::string& t : word_tokens) {
        double len = static_cast<double>(utf8_length(t));
        total_word_len += len;
        max_word_len = std::max(max_word_len, len);
    }
    set("avg_word_length",
        word_tokens.empty() ? 0.0 : total_word_len / static_cast<double>(word_tokens.size()));
    set("max_word_length", max_word_len);

    int letters = 0, uppers = 0, digits = 0, puncts = 0, questions = 0, bangs = 0, emoji = 0;
    for (char32_t cp : cps) {
        if (is_letter_cp(cp)) {
            ++letters;
            if (is_upper_cp(cp)) ++uppers;
        }
        if (cp >= U'0' && cp <= U'9') ++digits;
        if (is_punct_cp(cp)) ++puncts;
        if (cp == U'?') ++questions;
        if (cp == U'!') ++bangs;
        if (is_emoji_cp(cp)) ++emoji;
    }
    set("uppercase_char_ratio",
        letters == 0 ? 0.0 : static_cast<double>(uppers) / static_cast<double>(letters));
    set("digit_count", digits);
    set("punctuation_count", puncts);
    set("question_mark_count", questions);
    set("exclamation_mark_count", bangs);
    set("emoji_count", emoji);

    int urls = count_urls(cps);
    int mentions = count_marker(cps, U'@');
    int hashtags = count_marker(cps, U'#');
    set("url_count", urls);
    set("mention_count", mentions);
    set("hashtag_count", hashtags);

    int elongated = 0;
    for (const std::string& t : word_tokens) {
        if (t == "<url>" || t == "<user>") continue;
        if (has_triple_repeat(t)) ++elongated;
    }
    set("elongated_word_count", elongated);

    std::vector<std::u32string> chunks = whitespace_chunks(text);
    set("retweet_prefix", (!chunks.empty() && chunk_is_rt_marker(chunks[0])) ? 1.0 : 0.0);

    // Binary indicators.
    set("has_url", urls > 0 ? 1.0 : 0.0);
    set("has_mention", mentions > 0 ? 1.0 : 0.0);
    set("has_hashtag", hashtags > 0 ? 1.0 : 0.0);
    set("has_question_mark", questions > 0 ? 1.0 : 0.0);
    set("has_exclamation", bangs > 0 ? 1.0 : 0.0);
    set("has_digits", digits > 0 ? 1.0 : 0.0);
    set("has_location", message.has_location_meta ? 1.0 : 0.0);
    set("has_media", message.has_media_meta ? 1.0 : 0.0);

    // Lexical features over placeholdered word tokens.
    const std::vector<std::string>& stop = stopwords_for(message.language);
    const std::vector<std::string>& pron = first_person_pronouns_for(message.language);
    int stop_hits = 0, pron_hits = 0, numeric = 0;
    std::set<std::string> distinct;
    for (const std::string& t : word_tokens) {
        distinct.insert(t);
        if (std::find(stop.begin(), stop.end(), t) != stop.end()) ++stop_hits;
        if (std::find(pron.begin(), pron.end(), t) != pron.end()) ++pron_hits;
        if (is_numeric_token(t)) ++numeric;
    }
    set("stopword_ratio",
        word_tokens.empty() ? 0.0
                            : static_cast<double>(stop_hits) /
                                  static_cast<double>(word_tokens.size()));
    set("type_token_ratio",
        word_tokens.empty() ? 0.0
                            : static_cast<double>(distinct.size()) /
                                  static_cast<double>(word_tokens.size()));
    set("first_person_pronoun_count", pron_hits);
    set("numeric_token_count", numeric);

    int all_caps = 0;
    for (const std::string& t : raw_word_tokens) {
        if (is_all_caps_word(t)) ++all_caps;
    }
    set("all_caps_word_count", all_caps);

    int cleaned = 0;
    for (const std::string& t : word_tokens) {
        if (t == "<url>" || t == "<user>") continue;
        ++cleaned;
    }
    set("cleaned_token_count", cleaned);

    // Annotator-backed features; failure means neutral 0 plus a warning.
    if (annotators.sentiment) {
        std::optional<SentimentResult> s = annotators.sentiment(text, message.language);
        if (s.has_value()) {
            set("positive_word_count", s->positive_count);
            set("negative_word_count", s->negative_count);
            set("sentiment_polarity", s->polarity);
        } else {
            note_failure(warnings, "sentiment", message);
        }
    } else {
        note_failure(warnings, "sentiment", message);
    }

    if (annotators.ner) {
        std::optional<NerCounts> nr = annotators.ner(text, message.language);
        if (nr.has_value()) {
            set("ner_person_count", nr->person);
            set("ner_location_count", nr->location);
            set("ner_organization_count", nr->organization);
            set("ner_total_count", nr->total);
        } else {
            note_failure(warnings, "ner", message);
        }
    } else {
        note_failure(warnings, "ner", message);
    }

    static const char* kPosNames[kPosTagCount] = {
        "pos_noun_count", "pos_verb_count", "pos_adj_count", "pos_adv_count",
        "pos_pron_count", "pos_det_count",  "pos_adp_count", "pos_num_count",
        "pos_conj_count", "pos_part_count", "pos_punct_count", "pos_x_count"};
    if (annotators.pos) {
        std::optional<PosCounts> pc = annotators.pos(text, message.language);
        if (pc.has_value()) {
            for (int i = 0; i < kPosTagCount; ++i) set(kPosNames[i], (*pc)[i]);
        } else {
            note_failure(warnings, "pos", message);
        }
    } else {
        note_failure(warnings, "pos", message);
    }

    return v;
}

}  // namespace crisis
