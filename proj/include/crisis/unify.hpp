#pragma once

#include <string>
#include <vector>

#include "crisis/corpus.hpp"

namespace crisis {

enum class MapAction { MapRelated, MapNotRelated, Discard };

struct MappingEntry {
    std::string source_dataset;
    std::string original_label;  // stored trimmed + lowercased
    MapAction action;
};

struct OverrideEntry {
    std::string source_dataset;
    std::string id;
    MapAction action;
};

// Label-unification table: exact (dataset, lowercased label) lookup plus
// per-message-id overrides for manually relabeled rows.
struct LabelMapping {
    std::vector<MappingEntry> entries;
    std::vector<OverrideEntry> overrides;

    static LabelMapping load(const std::string& mapping_csv);
    void load_overrides(const std::string& override_csv);
    void check() const;  // throws on duplicate pairs / one-sided datasets
};

// A pre-unification source row: label still in the source dataset's own
// vocabulary, language possibly unknown.
struct RawRow {
    std::string id;
    std::string text;
    std::string language;
    std::string event_id;
    std::string source_dataset;
    std::string original_label;
    bool has_location_meta = false;
    bool has_media_meta = false;
};

std::vector<RawRow> load_raw_rows(const std::string& path, CorpusFormat format);

struct MappingResult {
    std::vector<Message> messages;
    size_t discarded = 0;
    std::vector<std::pair<std::string, std::string>> unmapped;  // (dataset, label)
    // One line per retained message: "<id> <- <dataset>/<label> via <rule>".
    std::vector<std::string> provenance_log;
};

MappingResult apply_label_mapping(const std::vector<RawRow>& raw_rows,
                                  const LabelMapping& mapping);

struct TaxonomyRecord {
    std::string event_id;
    std::string name;
    std::string hazard_type;
    HazardCategory hazard_category = HazardCategory::Natural;
    std::string hazard_subcategory;
    TemporalDevelopment temporal_development = TemporalDevelopment::Instantaneous;
    GeographicSpread geographic_spread = GeographicSpread::Focalized;
    std::string country;
    int year = 2000;
};

std::vector<TaxonomyRecord> load_taxonomy(const std::string& path);

// Fills every event's taxonomy fields; messages untouched. Throws when a
// corpus event has no record.
Corpus annotate_events(const Corpus& corpus, const std::vector<TaxonomyRecord>& taxonomy);

// Union of messages with (source_dataset, id) dedup keeping first occurrence;
// events unioned by id, conflicting fields are an error.
Corpus merge_corpora(const std::vector<Corpus>& sources);

}  // namespace crisis
