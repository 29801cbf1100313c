#include "crisis/unify.hpp"

#include <map>
#include <set>
#include <stdexcept>

#include "crisis/common.hpp"
#include "crisis/io.hpp"

namespace crisis {

namespace {

MapAction parse_action(const std::string& s, const std::string& where) {
    std::string v = to_lower_ascii(trim(s));
    if (v == "related" || v == "map_related") return MapAction::MapRelated;
    if (v == "not_related" || v == "map_not_related") return MapAction::MapNotRelated;
    if (v == "discard") return MapAction::Discard;
    throw std::runtime_error(concat(where, ": unknown action \"", s, "\""));
}

}  // namespace

LabelMapping LabelMapping::load(const std::string& mapping_csv) {
    Table t = read_csv(mapping_csv);
    for (const char* field : {"source_dataset", "original_label", "action"})
        if (t.column(field) < 0)
            throw std::runtime_error(
                concat(mapping_csv, ": header missing column \"", field, "\""));
    LabelMapping m;
    int c_ds = t.column("source_dataset");
    int c_label = t.column("original_label");
    int c_action = t.column("action");
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        std::string where = concat(mapping_csv, ":", i + 2);
        if (row.size() < t.header.size())
            throw std::runtime_error(concat(where, ": row too short"));
        m.entries.push_back({to_lower_ascii(trim(row[c_ds])),
                             to_lower_ascii(trim(row[c_label])),
                             parse_action(row[c_action], where)});
    }
    m.check();
    return m;
}

void LabelMapping::load_overrides(const std::string& override_csv) {
    Table t = read_csv(override_csv);
    for (const char* field : {"source_dataset", "id", "action"})
        if (t.column(field) < 0)
            throw std::runtime_error(
                concat(override_csv, ": header missing column \"", field, "\""));
    int c_ds = t.column("source_dataset");
    int c_id = t.column("id");
    int c_action = t.column("action");
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        std::string where = concat(override_csv, ":", i + 2);
        overrides.push_back({to_lower_ascii(trim(row[c_ds])), trim(row[c_id]),
                             parse_action(row[c_action], where)});
    }
}

void LabelMapping::check() const {
    std::set<std::pair<std::string, std::string>> seen;
    std::map<std::string, std::pair<bool, bool>> coverage;  // dataset -> (related, not)
    for (const auto& e : entries) {
        auto key = std::make_pair(e.source_dataset, e.original_label);
        if (!seen.insert(key).second)
            throw std::runtime_error(concat("duplicate mapping entry (",
                                            e.source_dataset, ", ", e.original_label,
                                            ")"));
        auto& cov = coverage[e.source_dataset];
        if (e.action == MapAction::MapRelated) cov.first = true;
        if (e.action == MapAction::MapNotRelated) cov.second = true;
    }
    for (const auto& [ds, cov] : coverage) {
        bool discard_only = !cov.first && !cov.second;
        if (!discard_only && !(cov.first && cov.second))
            throw std::runtime_error(
                concat("mapping for dataset \"", ds, "\" lacks a ",
                       cov.first ? "not_related" : "related", " entry"));
    }
}

std::vector<RawRow> load_raw_rows(const std::string& path, CorpusFormat format) {
    std::vector<RawRow> rows;
    if (format == CorpusFormat::UnifiedJsonLines) {
        for_each_jsonl(path, [&](const json& j, size_t lineno) {
            std::string where = concat(path, ":", lineno);
            for (const char* field : {"id", "text", "source_dataset", "original_label"})
                if (!j.contains(field))
                    throw std::runtime_error(
                        concat(where, ": missing field \"", field, "\""));
            RawRow r;
            r.id = j.at("id").get<std::string>();
            r.text = j.at("text").get<std::string>();
            r.language = j.value("language", "");
            r.event_id = j.value("event_id", "");
            r.source_dataset = j.at("source_dataset").get<std::string>();
            r.original_label = j.at("original_label").get<std::string>();
            r.has_location_meta = j.value("has_location_meta", false);
            r.has_media_meta = j.value("has_media_meta", false);
            rows.push_back(std::move(r));
        });
        return rows;
    }
    Table t = read_csv(path);
    for (const char* field : {"id", "text", "source_dataset", "original_label"})
        if (t.column(field) < 0)
            throw std::runtime_error(concat(path, ": header missing column \"", field,
                                            "\""));
    auto get = [&t](const std::vector<std::string>& row, const char* name) {
        int c = t.column(name);
        return (c >= 0 && static_cast<size_t>(c) < row.size()) ? row[c] : std::string();
    };
    for (const auto& row : t.rows) {
        RawRow r;
        r.id = get(row, "id");
        r.text = get(row, "text");
        r.language = get(row, "language");
        r.event_id = get(row, "event_id");
        r.source_dataset = get(row, "source_dataset");
        r.original_label = get(row, "original_label");
        std::string loc = to_lower_ascii(get(row, "has_location_meta"));
        std::string med = to_lower_ascii(get(row, "has_media_meta"));
        r.has_location_meta = loc == "true" || loc == "1";
        r.has_media_meta = med == "true" || med == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

MappingResult apply_label_mapping(const std::vector<RawRow>& raw_rows,
                                  const LabelMapping& mapping) {
    std::map<std::pair<std::string, std::string>, MapAction> lookup;
    for (const auto& e : mapping.entries)
        lookup[{e.source_dataset, e.original_label}] = e.action;
    std::map<std::pair<std::string, std::string>, MapAction> by_id;
    for (const auto& o : mapping.overrides)
        by_id[{o.source_dataset, o.id}] = o.action;

    MappingResult result;
    std::set<std::pair<std::string, std::string>> unmapped_seen;
    for (const RawRow& r : raw_rows) {
        std::string ds = to_lower_ascii(trim(r.source_dataset));
        std::string label = to_lower_ascii(trim(r.original_label));

        MapAction action;
        std::string rule;
        if (auto it = by_id.find({ds, r.id}); it != by_id.end()) {
            action = it->second;
            rule = "override";
        } else if (auto jt = lookup.find({ds, label}); jt != lookup.end()) {
            action = jt->second;
            rule = concat("mapping(", ds, ",", label, ")");
        } else {
            if (unmapped_seen.insert({ds, label}).second)
                result.unmapped.emplace_back(ds, label);
            continue;
        }

        if (action == MapAction::Discard) {
            ++result.discarded;
            continue;
        }
        Message m;
        m.id = r.id;
        m.text = r.text;
        m.language = r.language;
        m.event_id = r.event_id;
        m.label = action == MapAction::MapRelated ? LabelClass::Related
                                                  : LabelClass::NotRelated;
        m.source_dataset = r.source_dataset;
        m.original_label = r.original_label;
        m.has_location_meta = r.has_location_meta;
        m.has_media_meta = r.has_media_meta;
        result.provenance_log.push_back(
            concat(m.id, " <- ", ds, "/", label, " via ", rule));
        result.messages.push_back(std::move(m));
    }
    return result;
}

std::vector<TaxonomyRecord> load_taxonomy(const std::string& path) {
    Table t = read_csv(path);
    for (const char* field :
         {"event_id", "hazard_type", "hazard_category", "temporal_development",
          "geographic_spread", "country", "year"})
        if (t.column(field) < 0)
            throw std::runtime_error(concat(path, ": header missing column \"", field,
                                            "\""));
    std::vector<TaxonomyRecord> out;
    std::set<std::string> seen;
    auto get = [&t](const std::vector<std::string>& row, const char* name) {
        int c = t.column(name);
        return (c >= 0 && static_cast<size_t>(c) < row.size()) ? row[c] : std::string();
    };
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        std::string where = concat(path, ":", i + 2);
        TaxonomyRecord r;
        r.event_id = get(row, "event_id");
        if (!seen.insert(r.event_id).second)
            throw std::runtime_error(concat(where, ": duplicate taxonomy record for \"",
                                            r.event_id, "\""));
        r.name = get(row, "name");
        r.hazard_type = to_lower_ascii(trim(get(row, "hazard_type")));
        std::string cat = to_lower_ascii(trim(get(row, "hazard_category")));
        if (cat == "natural") r.hazard_category = HazardCategory::Natural;
        else if (cat == "human_induced") r.hazard_category = HazardCategory::HumanInduced;
        else throw std::runtime_error(concat(where, ": unknown hazard_category \"", cat, "\""));
        r.hazard_subcategory = get(row, "hazard_subcategory");
        std::string td = to_lower_ascii(trim(get(row, "temporal_development")));
        if (td == "instantaneous") r.temporal_development = TemporalDevelopment::Instantaneous;
        else if (td == "progressive") r.temporal_development = TemporalDevelopment::Progressive;
        else throw std::runtime_error(concat(where, ": unknown temporal_development \"", td, "\""));
        std::string gs = to_lower_ascii(trim(get(row, "geographic_spread")));
        if (gs == "focalized") r.geographic_spread = GeographicSpread::Focalized;
        else if (gs == "diffused") r.geographic_spread = GeographicSpread::Diffused;
        else throw std::runtime_error(concat(where, ": unknown geographic_spread \"", gs, "\""));
        r.country = get(row, "country");
        try {
            r.year = std::stoi(get(row, "year"));
        } catch (const std::exception&) {
            throw std::runtime_error(concat(where, ": year is not an integer"));
        }
        out.push_back(std::move(r));
    }
    return out;
}

Corpus annotate_events(const Corpus& corpus,
                       const std::vector<TaxonomyRecord>& taxonomy) {
    std::map<std::string, const TaxonomyRecord*> by_id;
    for (const auto& r : taxonomy) by_id[r.event_id] = &r;

    Corpus out;
    for (const Event& e : corpus.events()) {
        auto it = by_id.find(e.id);
        if (it == by_id.end())
            throw std::runtime_error(
                concat("no taxonomy record for event \"", e.id, "\""));
        const TaxonomyRecord& r = *it->second;
        Event annotated = e;
        if (!r.name.empty()) annotated.name = r.name;
        annotated.hazard_type = r.hazard_type;
        annotated.hazard_category = r.hazard_category;
        annotated.hazard_subcategory = r.hazard_subcategory;
        annotated.temporal_development = r.temporal_development;
        annotated.geographic_spread = r.geographic_spread;
        annotated.country = r.country;
        annotated.year = r.year;
        out.add_event(std::move(annotated));
    }
    for (const std::string& src : corpus.provenance()) out.add_provenance(src);
    for (const Message& m : corpus.messages()) out.add_message(m);
    return out;
}

Corpus merge_corpora(const std::vector<Corpus>& sources) {
    Corpus out;
    for (const Corpus& src : sources)
        for (const Event& e : src.events()) out.add_event(e);  // throws on conflict
    std::set<std::pair<std::string, std::string>> seen;
    for (const Corpus& src : sources) {
        for (const std::string& p : src.provenance()) out.add_provenance(p);
        for (const Message& m : src.messages()) {
            if (!seen.insert({m.source_dataset, m.id}).second) continue;  // keep first
            out.add_message(m);
        }
    }
    return out;
}

}  // namespace crisis
