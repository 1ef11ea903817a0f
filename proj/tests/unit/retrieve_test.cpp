#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "optree/catalog.hpp"
#include "optree/json_io.hpp"
#include "optree/retrieve.hpp"
#include "support/fixtures.hpp"
#include "support/properties.hpp"

using namespace optree;
using testsupport::f1_pipeline;
using testsupport::f1_ref;
using testsupport::f1_store;
using testsupport::item_ids;
using Ids = std::vector<std::vector<std::string>>;

namespace {

/// Fixed score per event id, looked up through the verbalization.
class TableScorer : public Scorer {
public:
    TableScorer(const EventStore& store, std::map<std::string, double> by_id) {
        for (const auto& [id, s] : by_id) {
            scores_[store.verbalization(*store.find(id))] = s;
        }
    }
    std::string_view name() const override { return "table"; }
    double score(std::string_view, std::string_view verbalization) const override {
        ++calls;
        auto it = scores_.find(std::string(verbalization));
        return it == scores_.end() ? 0.0 : it->second;
    }
    mutable int calls = 0;

private:
    std::map<std::string, double> scores_;
};

class BrokenScorer : public Scorer {
public:
    std::string_view name() const override { return "broken"; }
    double score(std::string_view, std::string_view) const override { throw ScorerUnavailable("offline"); }
};

EventStore workouts(int n) {
    std::vector<Event> events;
    for (int i = 0; i < n; ++i) {
        Event e;
        e.id = "w" + std::to_string(i);
        e.persona = "p";
        e.source = SourceKind::Workout;
        auto t = make_datetime(make_date(2024, 1, 1 + i), 7, 0);
        e.scope = {t, DateTime{t.minutes + 30}};
        e.fields = {{"workout_type", Value("yoga")}, {"duration_min", Value(30 + i)}};
        events.push_back(std::move(e));
    }
    return EventStore(std::move(events));
}

CandidateGroup group_of(const EventStore& store) {
    std::vector<ScoredEvent> c;
    for (EventRef r = 0; r < store.size(); ++r) {
        c.push_back({r, 10.0 - static_cast<double>(r)});
    }
    auto groups = group_candidates(c, store);
    EXPECT_EQ(groups.size(), 1u);
    return groups.front();
}

double bm25_oracle(const EventStore& store, const std::vector<std::string>& terms, EventRef doc, Bm25Params p) {
    std::vector<std::vector<std::string>> docs;
    double total_len = 0;
    for (const auto& e : store.events()) {
        docs.push_back(tokenize(verbalize(e)));
        total_len += static_cast<double>(docs.back().size());
    }
    const double n = static_cast<double>(docs.size());
    const double avg = total_len / n;
    double score = 0;
    for (const auto& t : std::set<std::string>(terms.begin(), terms.end())) {
        double df = 0;
        for (const auto& d : docs) {
            df += std::count(d.begin(), d.end(), t) > 0 ? 1 : 0;
        }
        auto tf = static_cast<double>(std::count(docs[doc].begin(), docs[doc].end(), t));
        if (tf == 0) {
            continue;
        }
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        const double len = static_cast<double>(docs[doc].size());
        score += idf * tf * (p.k1 + 1) / (tf + p.k1 * (1 - p.b + p.b * len / avg));
    }
    return score;
}

} // namespace

TEST(Lexicon, ContentTokensDropStopwords) {
    auto lex = Lexicon::parse("the\nof\n# comment\n", "");
    EXPECT_EQ(lex.content_tokens("The end of the Road"), (std::vector<std::string>{"end", "road"}));
}

TEST(Lexicon, ExpansionPhrasesMatchLongestFirst) {
    auto lex = Lexicon::parse("", "work\twork\nwork out\tworkout,session\n");
    auto units = lex.analyze("work out today");
    ASSERT_EQ(units.size(), 2u);
    EXPECT_EQ(units[0].label, "work out");
    EXPECT_EQ(units[0].accepted, (std::vector<std::string>{"session", "workout"}));
    EXPECT_EQ(units[1].accepted, (std::vector<std::string>{"today"}));
    EXPECT_EQ(lex.expanded_terms("work out today"), (std::vector<std::string>{"session", "today", "workout"}));
}

TEST(Lexicon, MalformedLinesRejected) {
    EXPECT_THROW(Lexicon::parse("", "phrase without tab\n"), ParseError);
}

TEST(Lexicon, BundledFilesMatchVocabulary) {
    auto file = Lexicon::parse("", read_text_file(testsupport::data_dir() / "expansion.tsv"));
    auto derived = Lexicon::parse("", vocabulary_expansions());
    EXPECT_EQ(file.expansions_text(), derived.expansions_text());
    auto gaz_file = Gazetteer::load(testsupport::data_dir() / "gazetteer.tsv");
    EXPECT_EQ(gaz_file.text(), Gazetteer::parse(vocabulary_gazetteer()).text());
}

TEST(SparseIndex, PostingsForF1) {
    const auto& index = f1_pipeline().index();
    EXPECT_EQ(index.doc_count(), 9u);
    std::set<std::string> docs;
    for (const auto& p : index.postings("yoga")) {
        docs.insert(f1_store()[p.doc].id);
    }
    EXPECT_EQ(docs, (std::set<std::string>{"e1", "e3"}));
    EXPECT_TRUE(index.postings("zebra").empty());
    EXPECT_EQ(SparseIndex::build(f1_store()), index);
}

TEST(SparseIndex, Bm25MatchesIndependentFormula) {
    const auto& store = f1_store();
    const auto& index = f1_pipeline().index();
    Bm25Params p{1.5, 0.6};
    for (auto terms : {std::vector<std::string>{"yoga"}, std::vector<std::string>{"taylor", "swift", "lover"},
                       std::vector<std::string>{"dinner", "pizza", "session"}}) {
        auto scored = index.score(store, terms, 100, p);
        ASSERT_FALSE(scored.empty());
        for (std::size_t i = 0; i < scored.size(); ++i) {
            EXPECT_NEAR(scored[i].score, bm25_oracle(store, terms, scored[i].ref, p), 1e-9);
            if (i > 0) {
                EXPECT_GE(scored[i - 1].score, scored[i].score);
            }
        }
        std::size_t positive = 0;
        for (EventRef r = 0; r < store.size(); ++r) {
            positive += bm25_oracle(store, terms, r, p) > 0 ? 1 : 0;
        }
        EXPECT_EQ(scored.size(), positive);
    }
}

TEST(SparseIndex, TopKAndSourceFilter) {
    const auto& store = f1_store();
    std::vector<std::string> terms{"taylor"};
    EXPECT_EQ(f1_pipeline().index().score(store, terms, 2, {}).size(), 2u);
    SourceSet only_mail;
    only_mail.insert(SourceKind::Mail);
    EXPECT_TRUE(f1_pipeline().index().score(store, terms, 10, {}, only_mail).empty());
}

TEST(CoverageScorer, F1Scores) {
    const auto& lex = f1_pipeline().retriever().lexicon();
    CoverageScorer scorer(lex);
    const auto& s = f1_store();
    EXPECT_DOUBLE_EQ(scorer.score("workout events", s.verbalization(f1_ref("e1"))), 1.0);
    EXPECT_DOUBLE_EQ(scorer.score("workout events", s.verbalization(f1_ref("e6"))), 0.0);
    for (EventRef r = 0; r < s.size(); ++r) {
        auto v = scorer.score("great yoga session", s.verbalization(r));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Classify, ThreeWayDecision) {
    auto store = workouts(3);
    auto group = group_of(store);
    RetrievalConfig cfg;
    auto decide = [&](std::map<std::string, double> scores) {
        TableScorer scorer(store, std::move(scores));
        return classify_group(group, "yoga", scorer, cfg, store).kind;
    };
    EXPECT_EQ(decide({{"w0", 0.9}, {"w1", 0.95}, {"w2", 0.85}}), GroupDecision::Kind::retain_all);
    EXPECT_EQ(decide({{"w0", 0.05}, {"w1", 0.1}, {"w2", 0.0}}), GroupDecision::Kind::drop_all);
    EXPECT_EQ(decide({{"w0", 0.9}, {"w1", 0.1}, {"w2", 0.9}}), GroupDecision::Kind::score_each);
    EXPECT_EQ(decide({{"w0", 0.8}, {"w1", 0.8}, {"w2", 0.8}}), GroupDecision::Kind::retain_all);
    EXPECT_EQ(decide({{"w0", 0.2}, {"w1", 0.2}, {"w2", 0.2}}), GroupDecision::Kind::drop_all);
}

TEST(Classify, ScoresOnlyRepresentatives) {
    auto store = workouts(8);
    auto group = group_of(store);
    RetrievalConfig cfg;
    cfg.representatives = 2;
    TableScorer scorer(store, {{"w0", 0.9}, {"w1", 0.9}});
    auto d = classify_group(group, "yoga", scorer, cfg, store);
    EXPECT_EQ(d.kind, GroupDecision::Kind::retain_all);
    EXPECT_EQ(scorer.calls, 2);
    ASSERT_EQ(d.representatives.size(), 2u);
    EXPECT_EQ(store[d.representatives[0].ref].id, "w0");
}

TEST(Classify, ScorerFailureFallsBackToScoreEach) {
    auto store = workouts(3);
    BrokenScorer scorer;
    auto d = classify_group(group_of(store), "yoga", scorer, {}, store);
    EXPECT_TRUE(d.scorer_failed);
    EXPECT_EQ(d.kind, GroupDecision::Kind::score_each);
}

TEST(Grouping, SignatureIsKindPlusKeys) {
    const auto& s = f1_store();
    EXPECT_EQ(signature_of(s[f1_ref("e6")]), signature_of(s[f1_ref("e7")]));
    EXPECT_NE(signature_of(s[f1_ref("e1")]), signature_of(s[f1_ref("e2")]));
    EXPECT_EQ(signature_of(s[f1_ref("e1")]).keys, (std::vector<std::string>{"duration_min", "workout_type"}));
}

TEST(Dedup, MergesCrossKindOverlapOnly) {
    const auto& s = f1_store();
    std::vector<EventRef> all;
    for (EventRef r = 0; r < s.size(); ++r) {
        all.push_back(r);
    }
    auto items = deduplicate(all, s);
    EXPECT_EQ(item_ids(items, s), (Ids{{"e1", "e3"}, {"e2"}, {"e4"}, {"e5"}, {"e6"}, {"e7"}, {"e8"}, {"e9"}}));
    for (const auto& it : items) {
        if (it.events.size() == 2) {
            EXPECT_EQ(s[it.events[0]].id, "e1"); // workout outranks the post
        }
    }
}

TEST(Dedup, SameKindOverlapStaysSeparate) {
    auto store = workouts(2);
    std::vector<Event> events(store.events().begin(), store.events().end());
    events[1].scope = events[0].scope;
    EventStore overlapping(events);
    std::vector<EventRef> both{0, 1};
    EXPECT_EQ(deduplicate(both, overlapping).size(), 2u);
}

TEST(Retriever, F1WorkoutQuery) {
    auto out = f1_pipeline().retriever().retrieve("workout events");
    EXPECT_EQ(item_ids(out.items, f1_store()), (Ids{{"e1", "e3"}, {"e4"}}));
    EXPECT_FALSE(out.detail.groups.empty());
    EXPECT_FALSE(out.detail.expanded_terms.empty());
}

TEST(Retriever, F1ItalianQuery) {
    auto out = f1_pipeline().retriever().retrieve("instances of eating Italian food");
    EXPECT_EQ(item_ids(out.items, f1_store()), (Ids{{"e2"}, {"e5"}}));
}

TEST(Retriever, NoMatchGivesEmptyList) {
    auto out = f1_pipeline().retriever().retrieve("zebra crossing");
    EXPECT_TRUE(out.items.empty());
}

TEST(Retriever, Deterministic) {
    const auto& r = f1_pipeline().retriever();
    EXPECT_EQ(r.retrieve("listening to Taylor Swift").items, r.retrieve("listening to Taylor Swift").items);
}

TEST(RetrievalConfig, Invariants) {
    RetrievalConfig c;
    EXPECT_NO_THROW(c.validate());
    c.tau_lo = 0.9;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.top_k = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.representatives = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.tau_hi = 1.2;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(RetrievalProperties, CandidateRecallOnGeneratedPersona) {
    auto r = testsupport::candidate_recall(testsupport::generated_pipeline(), 30, 17);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(RetrievalProperties, DedupFindsPlantedPairs) {
    const auto& g = testsupport::generated_persona();
    auto r = testsupport::dedup_against_planted(g, testsupport::generated_pipeline().store());
    EXPECT_GE(r.precision, 0.95) << r.first_spurious;
    EXPECT_GE(r.recall, 0.95) << r.first_missed;
}
