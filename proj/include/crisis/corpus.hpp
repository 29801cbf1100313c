#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace crisis {

// Binary task label. Related = the message refers to some disaster event.
enum class LabelClass { Related, NotRelated };

inline const char* label_name(LabelClass c) {
    return c == LabelClass::Related ? "related" : "not_related";
}
std::optional<LabelClass> parse_label(const std::string& s);

enum class HazardCategory { Natural, HumanInduced };
enum class TemporalDevelopment { Instantaneous, Progressive };
enum class GeographicSpread { Focalized, Diffused };

struct Message {
    std::string id;
    std::string text;
    std::string translated_text;  // empty = no pivot-language rendering stored
    std::string language;         // ISO 639-1; empty = unknown (flagged by validate)
    std::string event_id;
    LabelClass label = LabelClass::NotRelated;
    std::string source_dataset;
    std::string original_label;
    bool has_location_meta = false;
    bool has_media_meta = false;
};

struct Event {
    std::string id;
    std::string name;
    std::string hazard_type;  // lowercase token, e.g. "earthquake"
    HazardCategory hazard_category = HazardCategory::Natural;
    std::string hazard_subcategory;
    TemporalDevelopment temporal_development = TemporalDevelopment::Instantaneous;
    GeographicSpread geographic_spread = GeographicSpread::Focalized;
    std::string country;
    int year = 2000;
};

class Corpus {
public:
    const std::vector<Message>& messages() const { return messages_; }
    const std::vector<Event>& events() const { return events_; }
    const std::vector<std::string>& provenance() const { return provenance_; }

    const Message* find_message(const std::string& id) const;
    const Message* find_message(const std::string& dataset, const std::string& id) const;
    const Event* find_event(const std::string& id) const;

    // Appends a message; throws on duplicate (source_dataset, id).
    void add_message(Message m);
    // Appends an event; throws if the id exists with different fields.
    void add_event(Event e);
    void add_provenance(const std::string& source);

    size_t size() const { return messages_.size(); }
    bool empty() const { return messages_.empty(); }

private:
    std::vector<Message> messages_;
    std::vector<Event> events_;
    std::vector<std::string> provenance_;
    std::unordered_map<std::string, size_t> message_index_;   // id -> position
    std::unordered_map<std::string, size_t> event_index_;     // id -> position
    std::set<std::pair<std::string, std::string>> source_ids_;  // (dataset, id)
    std::map<std::pair<std::string, std::string>, size_t> source_index_;
};

enum class CorpusFormat { UnifiedJsonLines, DelimitedTable };

// Messages live at `path`; the event table sits next to it with an
// ".events" infix (corpus.jsonl -> corpus.events.jsonl).
std::string events_path_for(const std::string& messages_path);

Corpus load_corpus(const std::string& path, CorpusFormat format);
void save_corpus(const Corpus& corpus, const std::string& path, CorpusFormat format);

struct Violation {
    std::string kind;  // "message" | "event" | "corpus"
    std::string id;
    std::string rule;
    std::string detail;
};

std::vector<Violation> validate_corpus(const Corpus& corpus);

// Conjunctive selection over message/event attributes; empty set = no
// constraint on that attribute.
struct CorpusFilter {
    std::set<std::string> languages;
    std::set<std::string> hazard_types;
    std::set<std::string> event_ids;
    std::set<std::string> source_datasets;

    bool matches(const Message& m, const Event& e) const;
    CorpusFilter intersect(const CorpusFilter& other) const;
};

// Parses "language=en|es;hazard_type=flood" style selection specs.
CorpusFilter parse_filter(const std::string& spec);

Corpus filter_corpus(const Corpus& corpus, const CorpusFilter& filter);

bool is_iso639_1(const std::string& code);

// Stable hash over the full corpus content; manifests pin this.
uint64_t corpus_hash(const Corpus& corpus);

}  // namespace crisis
