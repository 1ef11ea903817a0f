#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "optree/config.hpp"
#include "optree/json_io.hpp"
#include "support/fixtures.hpp"

using namespace optree;

namespace {

PersonaProfile workouts_only(int n, double fraction) {
    auto p = default_profile("solo");
    p.counts = {{SourceKind::Workout, n}};
    p.duplicate_fraction = fraction;
    return p;
}

std::size_t count_kind(const GeneratedPersona& g, SourceKind k) {
    return static_cast<std::size_t>(
        std::count_if(g.events.begin(), g.events.end(), [&](const Event& e) { return e.source == k; }));
}

const Event& by_id(const GeneratedPersona& g, const std::string& id) {
    return *std::find_if(g.events.begin(), g.events.end(), [&](const Event& e) { return e.id == id; });
}

} // namespace

TEST(Generator, DeterministicForSeed) {
    auto p = default_profile();
    auto a = generate_persona(p, 42);
    auto b = generate_persona(p, 42);
    std::ostringstream sa, sb;
    write_events(sa, a.events);
    write_events(sb, b.events);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.expansions, b.expansions);
    auto c = generate_persona(p, 43);
    std::ostringstream sc;
    write_events(sc, c.events);
    EXPECT_NE(sa.str(), sc.str());
}

TEST(Generator, ExactCountsPlusDuplicates) {
    auto g = generate_persona(workouts_only(10, 0.3), 42);
    EXPECT_EQ(count_kind(g, SourceKind::Workout), 10u);
    EXPECT_EQ(g.events.size(), 10u + g.planted.size());
    EXPECT_EQ(g.planted.size(), 3u);
}

TEST(Generator, HalfFractionPlantsOverlappingDuplicates) {
    auto g = generate_persona(workouts_only(10, 0.5), 42);
    ASSERT_EQ(g.planted.size(), 5u);
    std::set<std::string> bases;
    for (const auto& pd : g.planted) {
        const auto& base = by_id(g, pd.base_id);
        const auto& dup = by_id(g, pd.duplicate_id);
        EXPECT_EQ(base.source, SourceKind::Workout);
        EXPECT_TRUE(dup.source == SourceKind::SocialMediaPost || dup.source == SourceKind::CalendarEntry);
        EXPECT_TRUE(temporal_overlap(base.scope, dup.scope));
        bases.insert(pd.base_id);
    }
    EXPECT_EQ(bases.size(), 5u);
}

TEST(Generator, ZeroFractionPlantsNothing) {
    auto g = generate_persona(workouts_only(10, 0.0), 1);
    EXPECT_TRUE(g.planted.empty());
    EXPECT_EQ(g.events.size(), 10u);
}

TEST(Generator, EventsAreValidAndInRange) {
    const auto& g = testsupport::generated_persona();
    std::set<std::string> ids;
    for (const auto& e : g.events) {
        EXPECT_NO_THROW(validate_event(e));
        EXPECT_GE(date_of(e.scope.start), g.profile.first);
        EXPECT_LE(date_of(e.scope.start), g.profile.last);
        EXPECT_TRUE(ids.insert(e.id).second);
    }
    for (const auto& [kind, n] : g.profile.counts) {
        EXPECT_GE(count_kind(g, kind), static_cast<std::size_t>(n)) << source_name(kind);
    }
}

TEST(Generator, ProfileValidation) {
    auto p = default_profile();
    p.duplicate_fraction = 1.5;
    EXPECT_THROW(p.validate(), ConfigError);
    p = default_profile();
    p.counts[SourceKind::Mail] = -1;
    EXPECT_THROW(p.validate(), ConfigError);
    p = default_profile();
    p.first = make_date(2025, 1, 1);
    p.last = make_date(2024, 1, 1);
    EXPECT_THROW(p.validate(), ConfigError);
    p = default_profile();
    p.preferences["artists"] = {"Nobody Famous"};
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Generator, WritesAllArtifacts) {
    auto dir = testsupport::scratch_dir("gen_write");
    auto g = generate_persona(workouts_only(4, 0.5), 3);
    write_generated(g, dir);
    for (const char* f : {"events.jsonl", "planted.tsv", "expansion.tsv", "gazetteer.tsv"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    EXPECT_EQ(load_events(dir / "events.jsonl").size(), g.events.size());
}

TEST(Questions, ZeroRequestedGivesNone) {
    const auto& g = testsupport::generated_persona();
    EventStore store(g.events);
    EXPECT_TRUE(generate_questions(store, g.profile, 1, 0).empty());
}

TEST(Questions, DeterministicAndAgreeWithOracle) {
    const auto& g = testsupport::generated_persona();
    EventStore store(g.events);
    auto a = generate_questions(store, g.profile, 5, 30);
    auto b = generate_questions(store, g.profile, 5, 30);
    ASSERT_EQ(a.size(), 30u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].question, b[i].question);
        EXPECT_EQ(gold_display(a[i].answer), gold_display(oracle_answer(store, a[i].template_id, a[i].slots)));
        auto m = match_question(a[i].question);
        ASSERT_TRUE(m) << a[i].question;
        EXPECT_EQ(m->tmpl->id, a[i].template_id);
    }
}

TEST(Questions, GoldCasesRoundTripThroughJsonl) {
    const auto& g = testsupport::generated_persona();
    EventStore store(g.events);
    auto cases = generate_questions(store, g.profile, 9, 10);
    auto dir = testsupport::scratch_dir("gold_rt");
    {
        std::ofstream out(dir / "gold.jsonl");
        write_gold_cases(out, cases);
    }
    auto back = load_gold_cases(dir / "gold.jsonl");
    ASSERT_EQ(back.size(), cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
        EXPECT_EQ(back[i].id, cases[i].id);
        EXPECT_EQ(back[i].slots, cases[i].slots);
        EXPECT_TRUE(structurally_equal(back[i].plan, cases[i].plan));
        EXPECT_EQ(gold_display(back[i].answer), gold_display(cases[i].answer));
    }
}
