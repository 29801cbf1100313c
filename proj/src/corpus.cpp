#include "crisis/corpus.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "crisis/common.hpp"
#include "crisis/io.hpp"

namespace crisis {

std::optional<LabelClass> parse_label(const std::string& s) {
    std::string v = to_lower_ascii(trim(s));
    if (v == "related") return LabelClass::Related;
    if (v == "not_related") return LabelClass::NotRelated;
    return std::nullopt;
}

namespace {

const char* category_name(HazardCategory c) {
    return c == HazardCategory::Natural ? "natural" : "human_induced";
}
const char* temporal_name(TemporalDevelopment t) {
    return t == TemporalDevelopment::Instantaneous ? "instantaneous" : "progressive";
}
const char* spread_name(GeographicSpread g) {
    return g == GeographicSpread::Focalized ? "focalized" : "diffused";
}

HazardCategory parse_category(const std::string& s, const std::string& where) {
    if (s == "natural") return HazardCategory::Natural;
    if (s == "human_induced") return HazardCategory::HumanInduced;
    throw std::runtime_error(concat(where, ": unknown hazard_category \"", s, "\""));
}
TemporalDevelopment parse_temporal(const std::string& s, const std::string& where) {
    if (s == "instantaneous") return TemporalDevelopment::Instantaneous;
    if (s == "progressive") return TemporalDevelopment::Progressive;
    throw std::runtime_error(concat(where, ": unknown temporal_development \"", s, "\""));
}
GeographicSpread parse_spread(const std::string& s, const std::string& where) {
    if (s == "focalized") return GeographicSpread::Focalized;
    if (s == "diffused") return GeographicSpread::Diffused;
    throw std::runtime_error(concat(where, ": unknown geographic_spread \"", s, "\""));
}

bool events_equal(const Event& a, const Event& b) {
    return a.id == b.id && a.name == b.name && a.hazard_type == b.hazard_type &&
           a.hazard_category == b.hazard_category &&
           a.hazard_subcategory == b.hazard_subcategory &&
           a.temporal_development == b.temporal_development &&
           a.geographic_spread == b.geographic_spread && a.country == b.country &&
           a.year == b.year;
}

}  // namespace

const Message* Corpus::find_message(const std::string& id) const {
    auto it = message_index_.find(id);
    return it == message_index_.end() ? nullptr : &messages_[it->second];
}

const Message* Corpus::find_message(const std::string& dataset,
                                    const std::string& id) const {
    auto it = source_index_.find(std::make_pair(dataset, id));
    return it == source_index_.end() ? nullptr : &messages_[it->second];
}

const Event* Corpus::find_event(const std::string& id) const {
    auto it = event_index_.find(id);
    return it == event_index_.end() ? nullptr : &events_[it->second];
}

void Corpus::add_message(Message m) {
    auto key = std::make_pair(m.source_dataset, m.id);
    if (source_ids_.count(key))
        throw std::runtime_error(concat("duplicate message (", m.source_dataset, ", ",
                                        m.id, ")"));
    source_ids_.insert(key);
    source_index_.emplace(key, messages_.size());
    message_index_.emplace(m.id, messages_.size());
    messages_.push_back(std::move(m));
}

void Corpus::add_event(Event e) {
    auto it = event_index_.find(e.id);
    if (it != event_index_.end()) {
        if (!events_equal(events_[it->second], e))
            throw std::runtime_error(
                concat("event \"", e.id, "\" redefined with conflicting fields"));
        return;
    }
    event_index_.emplace(e.id, events_.size());
    events_.push_back(std::move(e));
}

void Corpus::add_provenance(const std::string& source) {
    if (std::find(provenance_.begin(), provenance_.end(), source) == provenance_.end())
        provenance_.push_back(source);
}

std::string events_path_for(const std::string& messages_path) {
    size_t dot = messages_path.rfind('.');
    size_t slash = messages_path.find_last_of("/\\");
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return messages_path + ".events";
    return messages_path.substr(0, dot) + ".events" + messages_path.substr(dot);
}

namespace {

const std::array<const char*, 10> kMessageFields = {
    "id", "text", "translated_text", "language", "event_id",
    "label", "source_dataset", "original_label", "has_location_meta", "has_media_meta"};

const std::array<const char*, 9> kEventFields = {
    "id", "name", "hazard_type", "hazard_category", "hazard_subcategory",
    "temporal_development", "geographic_spread", "country", "year"};

bool parse_bool(const std::string& s, const std::string& where) {
    std::string v = to_lower_ascii(trim(s));
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0" || v.empty()) return false;
    throw std::runtime_error(concat(where, ": not a boolean: \"", s, "\""));
}

Message message_from_json(const json& j, const std::string& where) {
    Message m;
    for (const char* field : {"id", "text", "language", "event_id", "label",
                              "source_dataset"})
        if (!j.contains(field))
            throw std::runtime_error(concat(where, ": missing field \"", field, "\""));
    m.id = j.at("id").get<std::string>();
    m.text = j.at("text").get<std::string>();
    if (j.contains("translated_text") && !j.at("translated_text").is_null())
        m.translated_text = j.at("translated_text").get<std::string>();
    m.language = j.at("language").is_null() ? "" : j.at("language").get<std::string>();
    m.event_id = j.at("event_id").get<std::string>();
    std::string label = j.at("label").get<std::string>();
    auto parsed = parse_label(label);
    if (!parsed)
        throw std::runtime_error(concat(where, ": field \"label\": unknown value \"",
                                        label, "\""));
    m.label = *parsed;
    m.source_dataset = j.at("source_dataset").get<std::string>();
    if (j.contains("original_label") && !j.at("original_label").is_null())
        m.original_label = j.at("original_label").get<std::string>();
    m.has_location_meta = j.value("has_location_meta", false);
    m.has_media_meta = j.value("has_media_meta", false);
    return m;
}

Event event_from_json(const json& j, const std::string& where) {
    Event e;
    for (const char* field : {"id", "hazard_type", "hazard_category"})
        if (!j.contains(field))
            throw std::runtime_error(concat(where, ": missing field \"", field, "\""));
    e.id = j.at("id").get<std::string>();
    e.name = j.value("name", "");
    e.hazard_type = j.at("hazard_type").get<std::string>();
    e.hazard_category = parse_category(j.at("hazard_category").get<std::string>(), where);
    e.hazard_subcategory = j.value("hazard_subcategory", "");
    e.temporal_development =
        parse_temporal(j.value("temporal_development", "instantaneous"), where);
    e.geographic_spread = parse_spread(j.value("geographic_spread", "focalized"), where);
    e.country = j.value("country", "");
    e.year = j.value("year", 2000);
    return e;
}

json message_to_json(const Message& m) {
    json j;
    j["id"] = m.id;
    j["text"] = m.text;
    if (!m.translated_text.empty()) j["translated_text"] = m.translated_text;
    j["language"] = m.language;
    j["event_id"] = m.event_id;
    j["label"] = label_name(m.label);
    j["source_dataset"] = m.source_dataset;
    j["original_label"] = m.original_label;
    j["has_location_meta"] = m.has_location_meta;
    j["has_media_meta"] = m.has_media_meta;
    return j;
}

json event_to_json(const Event& e) {
    json j;
    j["id"] = e.id;
    j["name"] = e.name;
    j["hazard_type"] = e.hazard_type;
    j["hazard_category"] = category_name(e.hazard_category);
    j["hazard_subcategory"] = e.hazard_subcategory;
    j["temporal_development"] = temporal_name(e.temporal_development);
    j["geographic_spread"] = spread_name(e.geographic_spread);
    j["country"] = e.country;
    j["year"] = e.year;
    return j;
}

std::string row_field(const Table& t, const std::vector<std::string>& row,
                      const std::string& name, size_t lineno, const std::string& path) {
    int col = t.column(name);
    if (col < 0)
        throw std::runtime_error(concat(path, ": header missing column \"", name, "\""));
    if (static_cast<size_t>(col) >= row.size())
        throw std::runtime_error(
            concat(path, ":", lineno, ": row too short, no field \"", name, "\""));
    return row[static_cast<size_t>(col)];
}

Message message_from_row(const Table& t, const std::vector<std::string>& row,
                         size_t lineno, const std::string& path) {
    std::string where = concat(path, ":", lineno);
    Message m;
    m.id = row_field(t, row, "id", lineno, path);
    m.text = row_field(t, row, "text", lineno, path);
    m.translated_text = row_field(t, row, "translated_text", lineno, path);
    m.language = row_field(t, row, "language", lineno, path);
    m.event_id = row_field(t, row, "event_id", lineno, path);
    std::string label = row_field(t, row, "label", lineno, path);
    auto parsed = parse_label(label);
    if (!parsed)
        throw std::runtime_error(concat(where, ": field \"label\": unknown value \"",
                                        label, "\""));
    m.label = *parsed;
    m.source_dataset = row_field(t, row, "source_dataset", lineno, path);
    m.original_label = row_field(t, row, "original_label", lineno, path);
    m.has_location_meta =
        parse_bool(row_field(t, row, "has_location_meta", lineno, path), where);
    m.has_media_meta =
        parse_bool(row_field(t, row, "has_media_meta", lineno, path), where);
    return m;
}

Event event_from_row(const Table& t, const std::vector<std::string>& row, size_t lineno,
                     const std::string& path) {
    std::string where = concat(path, ":", lineno);
    Event e;
    e.id = row_field(t, row, "id", lineno, path);
    e.name = row_field(t, row, "name", lineno, path);
    e.hazard_type = row_field(t, row, "hazard_type", lineno, path);
    e.hazard_category = parse_category(row_field(t, row, "hazard_category", lineno, path), where);
    e.hazard_subcategory = row_field(t, row, "hazard_subcategory", lineno, path);
    e.temporal_development =
        parse_temporal(row_field(t, row, "temporal_development", lineno, path), where);
    e.geographic_spread =
        parse_spread(row_field(t, row, "geographic_spread", lineno, path), where);
    e.country = row_field(t, row, "country", lineno, path);
    std::string year = row_field(t, row, "year", lineno, path);
    try {
        e.year = std::stoi(year);
    } catch (const std::exception&) {
        throw std::runtime_error(concat(where, ": field \"year\": not an integer: \"",
                                        year, "\""));
    }
    return e;
}

bool file_exists(const std::string& path) {
    std::ifstream in(path);
    return in.good();
}

}  // namespace

Corpus load_corpus(const std::string& path, CorpusFormat format) {
    Corpus corpus;
    std::string epath = events_path_for(path);

    std::vector<std::pair<Message, size_t>> rows;  // message + line number
    std::vector<Event> events;

    if (format == CorpusFormat::UnifiedJsonLines) {
        if (file_exists(epath))
            for_each_jsonl(epath, [&](const json& j, size_t lineno) {
                events.push_back(event_from_json(j, concat(epath, ":", lineno)));
            });
        for_each_jsonl(path, [&](const json& j, size_t lineno) {
            rows.emplace_back(message_from_json(j, concat(path, ":", lineno)), lineno);
        });
    } else {
        if (file_exists(epath)) {
            Table et = read_csv(epath);
            for (size_t i = 0; i < et.rows.size(); ++i)
                events.push_back(event_from_row(et, et.rows[i], i + 2, epath));
        }
        Table mt = read_csv(path);
        bool empty_file = mt.rows.empty() &&
                          (mt.header.empty() || (mt.header.size() == 1 && mt.header[0].empty()));
        if (!empty_file) {
            for (const char* field : kMessageFields)
                if (mt.column(field) < 0)
                    throw std::runtime_error(
                        concat(path, ": header missing column \"", field, "\""));
            for (size_t i = 0; i < mt.rows.size(); ++i)
                rows.emplace_back(message_from_row(mt, mt.rows[i], i + 2, path), i + 2);
        }
    }

    for (auto& e : events) corpus.add_event(std::move(e));

    std::unordered_map<std::string, size_t> seen;  // (dataset \x1f id) -> line
    for (auto& [m, lineno] : rows) {
        std::string key = m.source_dataset + '\x1f' + m.id;
        auto it = seen.find(key);
        if (it != seen.end())
            throw std::runtime_error(concat(path, ":", lineno, ": duplicate (",
                                            m.source_dataset, ", ", m.id,
                                            "), first at line ", it->second));
        seen.emplace(key, lineno);
        if (!corpus.find_event(m.event_id))
            throw std::runtime_error(concat(path, ":", lineno,
                                            ": message \"", m.id,
                                            "\" references unknown event \"", m.event_id,
                                            "\""));
        corpus.add_provenance(m.source_dataset);
        corpus.add_message(std::move(m));
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format) {
    std::string epath = events_path_for(path);
    if (format == CorpusFormat::UnifiedJsonLines) {
        std::ofstream mout(path, std::ios::binary);
        if (!mout) throw std::runtime_error(concat("cannot write file: ", path));
        for (const Message& m : corpus.messages())
            mout << message_to_json(m).dump() << '\n';
        std::ofstream eout(epath, std::ios::binary);
        if (!eout) throw std::runtime_error(concat("cannot write file: ", epath));
        for (const Event& e : corpus.events()) eout << event_to_json(e).dump() << '\n';
        return;
    }

    Table mt;
    mt.header.assign(kMessageFields.begin(), kMessageFields.end());
    for (const Message& m : corpus.messages())
        mt.rows.push_back({m.id, m.text, m.translated_text, m.language, m.event_id,
                           label_name(m.label), m.source_dataset, m.original_label,
                           m.has_location_meta ? "true" : "false",
                           m.has_media_meta ? "true" : "false"});
    write_csv(path, mt);

    Table et;
    et.header.assign(kEventFields.begin(), kEventFields.end());
    for (const Event& e : corpus.events())
        et.rows.push_back({e.id, e.name, e.hazard_type, category_name(e.hazard_category),
                           e.hazard_subcategory, temporal_name(e.temporal_development),
                           spread_name(e.geographic_spread), e.country,
                           std::to_string(e.year)});
    write_csv(epath, et);
}

std::vector<Violation> validate_corpus(const Corpus& corpus) {
    std::vector<Violation> out;
    for (const Message& m : corpus.messages()) {
        if (m.id.empty())
            out.push_back({"message", m.id, "id_nonempty", "message has empty id"});
        if (trim(m.text).empty())
            out.push_back({"message", m.id, "text_nonempty",
                           "text empty after whitespace trimming"});
        if (!is_iso639_1(m.language))
            out.push_back({"message", m.id, "language_code",
                           concat("unrecognized language code \"", m.language, "\"")});
        if (!corpus.find_event(m.event_id))
            out.push_back({"message", m.id, "event_resolves",
                           concat("unknown event \"", m.event_id, "\"")});
    }
    for (const Event& e : corpus.events()) {
        bool lowercase_token = !e.hazard_type.empty();
        for (char c : e.hazard_type)
            if (!((c >= 'a' && c <= 'z') || c == '_' || c == '-')) lowercase_token = false;
        if (!lowercase_token)
            out.push_back({"event", e.id, "hazard_type_token",
                           concat("hazard_type \"", e.hazard_type,
                                  "\" is not a lowercase token")});
        if (e.year < 1990 || e.year > 2100)
            out.push_back({"event", e.id, "year_range",
                           concat("year ", e.year, " outside [1990, 2100]")});
    }
    return out;
}

bool CorpusFilter::matches(const Message& m, const Event& e) const {
    if (!languages.empty() && !languages.count(m.language)) return false;
    if (!hazard_types.empty() && !hazard_types.count(e.hazard_type)) return false;
    if (!event_ids.empty() && !event_ids.count(m.event_id)) return false;
    if (!source_datasets.empty() && !source_datasets.count(m.source_dataset)) return false;
    return true;
}

namespace {
std::set<std::string> intersect_sets(const std::set<std::string>& a,
                                     const std::set<std::string>& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    std::set<std::string> out;
    for (const auto& v : a)
        if (b.count(v)) out.insert(v);
    if (out.empty()) out.insert("\x1f-nothing-\x1f");  // conjunction matches nothing
    return out;
}
}  // namespace

CorpusFilter CorpusFilter::intersect(const CorpusFilter& other) const {
    CorpusFilter out;
    out.languages = intersect_sets(languages, other.languages);
    out.hazard_types = intersect_sets(hazard_types, other.hazard_types);
    out.event_ids = intersect_sets(event_ids, other.event_ids);
    out.source_datasets = intersect_sets(source_datasets, other.source_datasets);
    return out;
}

CorpusFilter parse_filter(const std::string& spec) {
    CorpusFilter f;
    for (const std::string& clause : split(spec, ';')) {
        std::string c = trim(clause);
        if (c.empty()) continue;
        size_t eq = c.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(concat("filter clause \"", c, "\" has no '='"));
        std::string attr = trim(c.substr(0, eq));
        std::set<std::string> values;
        for (const std::string& v : split(c.substr(eq + 1), '|')) {
            std::string t = trim(v);
            if (!t.empty()) values.insert(t);
        }
        if (attr == "language") f.languages = values;
        else if (attr == "hazard_type") f.hazard_types = values;
        else if (attr == "event_id") f.event_ids = values;
        else if (attr == "source_dataset") f.source_datasets = values;
        else throw std::runtime_error(concat("unknown filter attribute \"", attr, "\""));
    }
    return f;
}

Corpus filter_corpus(const Corpus& corpus, const CorpusFilter& filter) {
    Corpus out;
    std::set<std::string> needed_events;
    for (const Message& m : corpus.messages()) {
        const Event* e = corpus.find_event(m.event_id);
        if (!e) continue;  // dangling refs are validate_corpus territory
        if (filter.matches(m, *e)) needed_events.insert(m.event_id);
    }
    for (const Event& e : corpus.events())
        if (needed_events.count(e.id)) out.add_event(e);
    for (const Message& m : corpus.messages()) {
        const Event* e = corpus.find_event(m.event_id);
        if (e && filter.matches(m, *e)) {
            out.add_provenance(m.source_dataset);
            out.add_message(m);
        }
    }
    return out;
}

bool is_iso639_1(const std::string& code) {
    static const std::set<std::string> kCodes = {
        "aa", "ab", "ae", "af", "ak", "am", "an", "ar", "as", "av", "ay", "az",
        "ba", "be", "bg", "bh", "bi", "bm", "bn", "bo", "br", "bs", "ca", "ce",
        "ch", "co", "cr", "cs", "cu", "cv", "cy", "da", "de", "dv", "dz", "ee",
        "el", "en", "eo", "es", "et", "eu", "fa", "ff", "fi", "fj", "fo", "fr",
        "fy", "ga", "gd", "gl", "gn", "gu", "gv", "ha", "he", "hi", "ho", "hr",
        "ht", "hu", "hy", "hz", "ia", "id", "ie", "ig", "ii", "ik", "io", "is",
        "it", "iu", "ja", "jv", "ka", "kg", "ki", "kj", "kk", "kl", "km", "kn",
        "ko", "kr", "ks", "ku", "kv", "kw", "ky", "la", "lb", "lg", "li", "ln",
        "lo", "lt", "lu", "lv", "mg", "mh", "mi", "mk", "ml", "mn", "mr", "ms",
        "mt", "my", "na", "nb", "nd", "ne", "ng", "nl", "nn", "no", "nr", "nv",
        "ny", "oc", "oj", "om", "or", "os", "pa", "pi", "pl", "ps", "pt", "qu",
        "rm", "rn", "ro", "ru", "rw", "sa", "sc", "sd", "se", "sg", "si", "sk",
        "sl", "sm", "sn", "so", "sq", "sr", "ss", "st", "su", "sv", "sw", "ta",
        "te", "tg", "th", "ti", "tk", "tl", "tn", "to", "tr", "ts", "tt", "tw",
        "ty", "ug", "uk", "ur", "uz", "ve", "vi", "vo", "wa", "wo", "xh", "yi",
        "yo", "za", "zh", "zu"};
    return kCodes.count(code) > 0;
}

uint64_t corpus_hash(const Corpus& corpus) {
    uint64_t h = 0xCBF29CE484222325ULL;
    auto feed = [&h](const std::string& s) {
        h = fnv1a64(s, h);
        h = fnv1a64(std::string(1, '\x1e'), h);
    };
    for (const Message& m : corpus.messages()) {
        feed(m.id);
        feed(m.text);
        feed(m.translated_text);
        feed(m.language);
        feed(m.event_id);
        feed(label_name(m.label));
        feed(m.source_dataset);
        feed(m.original_label);
        feed(m.has_location_meta ? "1" : "0");
        feed(m.has_media_meta ? "1" : "0");
    }
    for (const Event& e : corpus.events()) {
        feed(e.id);
        feed(e.name);
        feed(e.hazard_type);
        feed(category_name(e.hazard_category));
        feed(e.hazard_subcategory);
        feed(temporal_name(e.temporal_development));
        feed(spread_name(e.geographic_spread));
        feed(e.country);
        feed(std::to_string(e.year));
    }
    return h;
}

}  // namespace crisis
