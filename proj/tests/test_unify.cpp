#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "crisis/unify.hpp"
#include "support/synthetic.hpp"

using namespace crisis;

namespace {

std::string write_text(const std::string& dir, const std::string& name,
                       const std::string& content) {
    std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

const char* kMappingCsv =
    "source_dataset,original_label,action\n"
    "dsa,on-topic,related\n"
    "dsa,off-topic,not_related\n"
    "dsa,not labeled,discard\n"
    "dsb,Relevant,related\n"
    "dsb,not relevant,not_related\n";

}  // namespace

TEST_CASE("mapping rows are stored trimmed and lowercased") {
    std::string dir = synth::scratch_dir("unify_mapping");
    LabelMapping m = LabelMapping::load(write_text(dir, "map.csv", kMappingCsv));
    REQUIRE(m.entries.size() == 5);
    CHECK(m.entries[3].original_label == "relevant");
    CHECK(m.entries[0].action == MapAction::MapRelated);
    CHECK(m.entries[1].action == MapAction::MapNotRelated);
    CHECK(m.entries[2].action == MapAction::Discard);
    CHECK_NOTHROW(m.check());
}

TEST_CASE("mapping sanity check rejects duplicates and one-sided datasets") {
    std::string dir = synth::scratch_dir("unify_mapcheck");
    // Loading runs the check; the same pair after normalization is a duplicate.
    std::string dup_path = write_text(dir, "dup.csv",
                                      "source_dataset,original_label,action\n"
                                      "dsa,yes,related\n"
                                      "dsa,YES,not_related\n");
    CHECK_THROWS_WITH_AS(LabelMapping::load(dup_path),
                         doctest::Contains("duplicate"), std::runtime_error);

    std::string one_path = write_text(dir, "one.csv",
                                      "source_dataset,original_label,action\n"
                                      "dsa,yes,related\n");
    CHECK_THROWS_WITH_AS(LabelMapping::load(one_path), doctest::Contains("lacks"),
                         std::runtime_error);

    // A dataset that only discards is allowed.
    CHECK_NOTHROW(LabelMapping::load(write_text(
        dir, "disc.csv",
        "source_dataset,original_label,action\n"
        "dsa,junk,discard\n")));
}

TEST_CASE("label unification maps, discards, and reports unknown labels once") {
    std::string dir = synth::scratch_dir("unify_apply");
    LabelMapping m = LabelMapping::load(write_text(dir, "map.csv", kMappingCsv));

    std::vector<RawRow> rows(6);
    rows[0] = {"r1", "earthquake hits", "en", "ev1", "dsa", "on-topic", true, false};
    rows[1] = {"r2", "lunch pics", "en", "ev1", "dsa", "Off-Topic", false, false};
    rows[2] = {"r3", "meh", "en", "ev1", "dsa", "not labeled", false, false};
    rows[3] = {"r4", "flood waters", "en", "ev2", "dsb", "  RELEVANT ", false, true};
    rows[4] = {"r5", "mystery", "en", "ev2", "dsb", "sideways", false, false};
    rows[5] = {"r6", "mystery again", "en", "ev2", "dsb", "Sideways", false, false};

    MappingResult result = apply_label_mapping(rows, m);
    REQUIRE(result.messages.size() == 3);
    CHECK(result.messages[0].label == LabelClass::Related);
    CHECK(result.messages[1].label == LabelClass::NotRelated);
    CHECK(result.messages[2].label == LabelClass::Related);
    CHECK(result.messages[2].original_label == "  RELEVANT ");  // source text kept
    CHECK(result.discarded == 1);
    REQUIRE(result.unmapped.size() == 1);  // both sideways rows collapse to one
    CHECK(result.unmapped[0] == std::pair<std::string, std::string>{"dsb", "sideways"});
    REQUIRE(result.provenance_log.size() == 3);
    CHECK(result.provenance_log[0] == "r1 <- dsa/on-topic via mapping(dsa,on-topic)");
}

TEST_CASE("per-id overrides beat the label table") {
    std::string dir = synth::scratch_dir("unify_override");
    LabelMapping m = LabelMapping::load(write_text(dir, "map.csv", kMappingCsv));
    m.load_overrides(write_text(dir, "ovr.csv",
                                "source_dataset,id,action\n"
                                "dsa,r1,not_related\n"
                                "dsa,r9,discard\n"));

    std::vector<RawRow> rows(2);
    rows[0] = {"r1", "earthquake hits", "en", "ev1", "dsa", "on-topic", false, false};
    rows[1] = {"r9", "noise", "en", "ev1", "dsa", "on-topic", false, false};
    MappingResult result = apply_label_mapping(rows, m);
    REQUIRE(result.messages.size() == 1);
    CHECK(result.messages[0].label == LabelClass::NotRelated);
    CHECK(result.discarded == 1);
    CHECK(result.provenance_log[0] == "r1 <- dsa/on-topic via override");
}

TEST_CASE("raw rows load from both formats with meta flags") {
    std::string dir = synth::scratch_dir("unify_raw");
    std::string csv = write_text(dir, "raw.csv",
                                 "id,text,language,event_id,source_dataset,original_label,"
                                 "has_location_meta,has_media_meta\n"
                                 "a,hello,en,ev1,dsa,on-topic,true,0\n"
                                 "b,\"quoted, text\",es,ev1,dsa,off-topic,1,false\n");
    auto rows = load_raw_rows(csv, CorpusFormat::DelimitedTable);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].has_location_meta);
    CHECK_FALSE(rows[0].has_media_meta);
    CHECK(rows[1].text == "quoted, text");
    CHECK(rows[1].has_location_meta);

    std::string jsonl = write_text(
        dir, "raw.jsonl",
        R"({"id":"a","text":"hello","source_dataset":"dsa","original_label":"x"})" "\n");
    auto jrows = load_raw_rows(jsonl, CorpusFormat::UnifiedJsonLines);
    REQUIRE(jrows.size() == 1);
    CHECK(jrows[0].language.empty());

    std::string broken = write_text(dir, "broken.csv", "id,text\n1,hi\n");
    CHECK_THROWS_WITH_AS(load_raw_rows(broken, CorpusFormat::DelimitedTable),
                         doctest::Contains("source_dataset"), std::runtime_error);
}

TEST_CASE("taxonomy annotation fills every event and rejects gaps") {
    std::string dir = synth::scratch_dir("unify_taxonomy");
    std::string tax = write_text(
        dir, "tax.csv",
        "event_id,name,hazard_type,hazard_category,hazard_subcategory,"
        "temporal_development,geographic_spread,country,year\n"
        "ev1,Nepal Earthquake,earthquake,natural,geophysical,instantaneous,focalized,"
        "Nepal,2015\n"
        "ev2,Alberta Floods,flood,natural,hydrological,progressive,diffused,Canada,2013\n");
    auto records = load_taxonomy(tax);
    REQUIRE(records.size() == 2);
    CHECK(records[1].temporal_development == TemporalDevelopment::Progressive);
    CHECK(records[1].geographic_spread == GeographicSpread::Diffused);
    CHECK(records[0].year == 2015);

    Corpus c;
    Event stub;
    stub.id = "ev1";
    stub.hazard_type = "unknown";
    c.add_event(stub);
    Message m;
    m.id = "m1";
    m.text = "quake";
    m.language = "en";
    m.event_id = "ev1";
    m.source_dataset = "dsa";
    c.add_message(m);

    Corpus annotated = annotate_events(c, records);
    const Event* e = annotated.find_event("ev1");
    REQUIRE(e != nullptr);
    CHECK(e->hazard_type == "earthquake");
    CHECK(e->country == "Nepal");
    CHECK(annotated.find_message("dsa", "m1") != nullptr);

    Corpus missing;
    Event other;
    other.id = "ev3";
    other.hazard_type = "x";
    missing.add_event(other);
    CHECK_THROWS_WITH_AS(annotate_events(missing, records), doctest::Contains("ev3"),
                         std::runtime_error);

    std::string dup = write_text(
        dir, "dup.csv",
        "event_id,name,hazard_type,hazard_category,hazard_subcategory,"
        "temporal_development,geographic_spread,country,year\n"
        "ev1,A,flood,natural,,progressive,diffused,X,2010\n"
        "ev1,B,flood,natural,,progressive,diffused,X,2010\n");
    CHECK_THROWS_WITH_AS(load_taxonomy(dup), doctest::Contains("duplicate"),
                         std::runtime_error);
}

TEST_CASE("corpus merge dedups messages and rejects conflicting events") {
    Corpus a, b;
    Event ev;
    ev.id = "ev1";
    ev.hazard_type = "flood";
    a.add_event(ev);
    b.add_event(ev);

    Message m1;
    m1.id = "m1";
    m1.text = "first copy";
    m1.language = "en";
    m1.event_id = "ev1";
    m1.source_dataset = "dsa";
    a.add_message(m1);
    a.add_provenance("dsa");

    Message m1_dup = m1;
    m1_dup.text = "second copy";
    b.add_message(m1_dup);
    Message m2 = m1;
    m2.id = "m2";
    b.add_message(m2);
    b.add_provenance("dsa");

    Corpus merged = merge_corpora({a, b});
    CHECK(merged.size() == 2);
    CHECK(merged.find_message("dsa", "m1")->text == "first copy");  // first wins

    Corpus conflicting;
    Event ev2 = ev;
    ev2.year = 1991;
    conflicting.add_event(ev2);
    CHECK_THROWS(merge_corpora({a, conflicting}));
}
