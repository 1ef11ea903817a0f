#include <gtest/gtest.h>

#include "optree/extract.hpp"
#include "support/fixtures.hpp"

using namespace optree;
using testsupport::f1_ref;
using testsupport::f1_store;

namespace {

class OfflineExtractor : public Extractor {
public:
    std::string_view name() const override { return "offline"; }
    Value extract(const Event&, std::string_view, std::string_view) const override {
        throw ExtractorUnavailable("backend down");
    }
};

ResultItem item_of(std::initializer_list<const char*> ids) {
    ResultItem it;
    for (const char* id : ids) {
        it.events.push_back(f1_ref(id));
    }
    return it;
}

const Gazetteer& gazetteer() {
    static const auto g = Gazetteer::load(testsupport::data_dir() / "gazetteer.tsv");
    return g;
}

const AliasTable& aliases() {
    static const auto a = AliasTable::load(testsupport::data_dir() / "aliases.tsv");
    return a;
}

Value extract(const ResultItem& it, std::string_view key, ExtractDetail* detail = nullptr) {
    static const GazetteerExtractor extractor(gazetteer());
    return extract_value(it, key, f1_store(), aliases(), extractor, detail);
}

} // namespace

TEST(DerivedKeys, FromTemporalScope) {
    const auto& e2 = f1_store()[f1_ref("e2")];
    EXPECT_EQ(derived_value(e2, "date"), Value(make_date(2024, 3, 1)));
    EXPECT_EQ(derived_value(e2, "start_time"), Value(make_datetime(make_date(2024, 3, 1), 19, 0)));
    EXPECT_EQ(derived_value(e2, "end_time"), Value(make_datetime(make_date(2024, 3, 1), 21, 0)));
    EXPECT_EQ(derived_value(e2, "month"), Value("2024-03"));
    EXPECT_EQ(derived_value(e2, "year"), Value(2024));
    EXPECT_EQ(derived_value(e2, "weekday"), Value("friday"));
    EXPECT_FALSE(is_derived_key("artist"));
}

TEST(ExtractValue, StoredFieldsWin) {
    EXPECT_EQ(extract(item_of({"e1"}), "workout_type"), Value("yoga"));
    EXPECT_EQ(extract(item_of({"e6"}), "artist"), Value("Taylor Swift"));
}

TEST(ExtractValue, MergedItemUsesCanonicalScopeAndAnyField) {
    auto merged = item_of({"e3", "e1"});
    EXPECT_EQ(extract(merged, "start_time"), Value(make_datetime(make_date(2024, 3, 1), 7, 0)));
    EXPECT_EQ(extract(merged, "duration_min"), Value(60));
}

TEST(ExtractValue, GazetteerReadsText) {
    ExtractDetail d;
    EXPECT_EQ(extract(item_of({"e2"}), "cuisine", &d), Value("italian"));
    EXPECT_EQ(extract(item_of({"e5"}), "cuisine", &d), Value("italian"));
    EXPECT_EQ(d.from_extractor, 2u);
    EXPECT_TRUE(extract(item_of({"e6"}), "cuisine").is_null());
}

TEST(ExtractValue, AliasesResolveAlternativeFieldNames) {
    std::vector<Event> events(f1_store().events().begin(), f1_store().events().end());
    auto& stream = *std::find_if(events.begin(), events.end(), [](const Event& e) { return e.id == "e7"; });
    stream.fields.erase("artist");
    stream.fields.emplace("performer", Value("Phoebe Bridgers"));
    EventStore store(events);
    ResultItem it;
    it.events = {*store.find("e7")};
    GazetteerExtractor none{Gazetteer{}};
    EXPECT_EQ(extract_value(it, "artist", store, aliases(), none), Value("Phoebe Bridgers"));
}

TEST(ExtractValue, BackendFailureBecomesNullAndIsRecorded) {
    OfflineExtractor offline;
    ExtractDetail d;
    auto v = extract_value(item_of({"e2"}), "cuisine", f1_store(), aliases(), offline, &d);
    EXPECT_TRUE(v.is_null());
    EXPECT_EQ(d.missing, 1u);
    ASSERT_EQ(d.failures.size(), 1u);
    EXPECT_EQ(d.failures[0].key, "cuisine");
}

TEST(ExtractAttributes, AddsKeysAndKeepsExisting) {
    std::vector<ResultItem> items = {item_of({"e1"}), item_of({"e9"})};
    items[0].attrs["date"] = Value("kept");
    GazetteerExtractor extractor(gazetteer());
    ExtractDetail d;
    std::vector<std::string> keys = {"date", "series", "workout_type"};
    extract_attributes(items, keys, f1_store(), aliases(), extractor, &d);
    EXPECT_EQ(items[0].attrs.at("date"), Value("kept"));
    EXPECT_EQ(items[0].attrs.at("workout_type"), Value("yoga"));
    EXPECT_EQ(items[1].attrs.at("date"), Value(make_date(2024, 2, 20)));
    EXPECT_TRUE(items[1].attrs.at("series").is_null());
    EXPECT_EQ(items[1].attrs.at("workout_type"), Value("running")); // "running shoes" in the mail text
    EXPECT_EQ(d.items.size(), 2u);
    EXPECT_GE(d.missing, 1u);
}

TEST(Gazetteer, FirstMatchWinsCaseInsensitively) {
    auto g = Gazetteer::parse("# c\nmood\tgreat\thappy\nmood\tgreat yoga\tcalm\n");
    EXPECT_EQ(g.match("mood", "GREAT YOGA session"), "happy");
    EXPECT_FALSE(g.match("mood", "meh"));
    EXPECT_FALSE(g.match("other", "great"));
    EXPECT_THROW(Gazetteer::parse("only\ttwo\n"), ParseError);
}

TEST(AliasTable, ParsesAndLooksUp) {
    auto a = AliasTable::parse("artist\tperformer,singer\n");
    auto got = a.aliases("artist");
    EXPECT_EQ(std::vector<std::string>(got.begin(), got.end()), (std::vector<std::string>{"performer", "singer"}));
    EXPECT_TRUE(a.aliases("title").empty());
}
