#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "optree/error.hpp"
#include "optree/event.hpp"
#include "optree/result.hpp"

namespace optree {

// ---------------------------------------------------------------------------
// Lexicon: stopwords and query expansion
// ---------------------------------------------------------------------------

/// A query unit is satisfied by a document containing any accepted token.
/// Plain content tokens accept themselves; expansion phrases accept their
/// expansion list.
struct QueryUnit {
    std::string label;
    std::vector<std::string> accepted;
};

class Lexicon {
public:
    /// Stopword text: one word per line. Expansion text: `phrase TAB token,token,...`.
    /// Blank lines and lines starting with '#' are ignored. Throws ParseError.
    static Lexicon parse(std::string_view stopwords, std::string_view expansions);
    static Lexicon load(const std::filesystem::path& stopwords, const std::filesystem::path& expansions);

    void add_stopword(std::string_view word);
    void add_expansion(std::string_view phrase, const std::vector<std::string>& tokens);
    /// Adds the other lexicon's entries; existing expansions are extended.
    void merge(const Lexicon& other);

    bool is_stopword(std::string_view token) const;
    /// Query tokens with stopwords removed.
    std::vector<std::string> content_tokens(std::string_view query) const;
    /// Units in query order. Expansion phrases match greedily (longest first)
    /// on the raw tokens; remaining stopwords are dropped.
    std::vector<QueryUnit> analyze(std::string_view query) const;
    /// Distinct accepted tokens of all units, sorted.
    std::vector<std::string> expanded_terms(std::string_view query) const;

    std::string stopwords_text() const;
    std::string expansions_text() const;

private:
    std::unordered_set<std::string> stopwords_;
    // phrase (space-joined tokens) -> accepted tokens
    std::map<std::string, std::vector<std::string>> expansions_;
    std::size_t longest_phrase_ = 1;
};

// ---------------------------------------------------------------------------
// Scorers
// ---------------------------------------------------------------------------

class ScorerUnavailable : public Error {
public:
    using Error::Error;
};

/// Relevance of an event to a query, in [0, 1]. Implementations must be
/// safe to call concurrently.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual std::string_view name() const = 0;
    /// Throws ScorerUnavailable when the backing model cannot answer.
    virtual double score(std::string_view query, std::string_view verbalization) const = 0;
};

/// Default deterministic scorer: fraction of query units present in the
/// verbalization, plus a bonus when two consecutive units appear as adjacent
/// tokens, capped at 1.
class CoverageScorer : public Scorer {
public:
    static constexpr double phrase_bonus = 0.25;

    explicit CoverageScorer(const Lexicon& lexicon) : lexicon_(&lexicon) {}
    std::string_view name() const override { return "coverage"; }
    double score(std::string_view query, std::string_view verbalization) const override;

private:
    const Lexicon* lexicon_;
};

double score_event(const Event& event, std::string_view query, const Scorer& scorer);

// ---------------------------------------------------------------------------
// Sparse index
// ---------------------------------------------------------------------------

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct ScoredEvent {
    EventRef ref = 0;
    double score = 0;
};

/// Inverted index over event verbalizations.
class SparseIndex {
public:
    struct Posting {
        EventRef doc;
        std::uint32_t tf;
        friend bool operator==(const Posting&, const Posting&) = default;
    };

    static SparseIndex build(const EventStore& store);

    std::size_t doc_count() const { return doc_lengths_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    std::uint32_t doc_length(EventRef r) const { return doc_lengths_[r]; }
    std::size_t vocabulary_size() const { return postings_.size(); }
    std::optional<std::uint32_t> term_id(std::string_view token) const;
    std::span<const Posting> postings(std::string_view token) const;

    /// BM25 over the distinct terms; returns the top-k events with a positive
    /// score, best first, ties broken by event id.
    std::vector<ScoredEvent> score(const EventStore& store, std::span<const std::string> terms, std::size_t k,
                                   const Bm25Params& params, const SourceSet& sources = SourceSet::all()) const;

    friend bool operator==(const SparseIndex&, const SparseIndex&) = default;

private:
    std::unordered_map<std::string, std::uint32_t> vocabulary_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0;
};

SparseIndex build_index(const EventStore& store);

/// Expands the query through the lexicon and scores it against the index.
std::vector<ScoredEvent> sparse_score(const SparseIndex& index, const EventStore& store, const Lexicon& lexicon,
                                      std::string_view query, std::size_t k, const Bm25Params& params = {},
                                      const SourceSet& sources = SourceSet::all());

// ---------------------------------------------------------------------------
// Grouping, classification, deduplication
// ---------------------------------------------------------------------------

/// Events with the same source kind and the same field-key set.
struct PatternSignature {
    SourceKind source = SourceKind::CalendarEntry;
    std::vector<std::string> keys;

    friend bool operator==(const PatternSignature&, const PatternSignature&) = default;
    friend auto operator<=>(const PatternSignature&, const PatternSignature&) = default;
};

PatternSignature signature_of(const Event& e);
std::string to_string(const PatternSignature& sig);

struct CandidateGroup {
    PatternSignature signature;
    std::vector<ScoredEvent> members; // best sparse score first
};

/// Partition by signature; groups ordered by best member score.
std::vector<CandidateGroup> group_candidates(std::span<const ScoredEvent> candidates, const EventStore& store);

struct RetrievalConfig {
    std::size_t top_k = 1000;
    Bm25Params bm25;
    double tau = 0.5;
    double tau_hi = 0.8;
    double tau_lo = 0.2;
    std::size_t representatives = 3;
    bool dedup = true;

    /// Throws ConfigError when the invariants 0 <= tau_lo < tau_hi <= 1, k >= 1, R >= 1 fail.
    void validate() const;
};

struct GroupDecision {
    enum class Kind { drop_all, retain_all, score_each };
    Kind kind = Kind::score_each;
    std::vector<ScoredEvent> representatives; // scored with the per-event scorer
    bool scorer_failed = false;
};

std::string_view decision_name(GroupDecision::Kind k);

/// Scores the top representatives of the group and decides for all members.
GroupDecision classify_group(const CandidateGroup& group, std::string_view query, const Scorer& scorer,
                             const RetrievalConfig& cfg, const EventStore& store);

/// Merges cross-kind events with overlapping scopes (connected components of
/// the overlap graph). Canonical constituent first; items ordered by the
/// canonical event's position in the store.
std::vector<ResultItem> deduplicate(std::span<const EventRef> retained, const EventStore& store);

struct RetrievedEventDetail {
    EventRef ref = 0;
    double sparse_score = 0;
    std::optional<double> classifier_score;
    bool by_pattern = false; // decided for the whole group
    bool retained = false;
};

struct RetrievedGroupDetail {
    PatternSignature signature;
    GroupDecision::Kind decision = GroupDecision::Kind::score_each;
    std::size_t size = 0;
};

struct RetrievalDetail {
    std::string query;
    std::vector<std::string> expanded_terms;
    std::vector<RetrievedGroupDetail> groups;
    std::vector<RetrievedEventDetail> events; // candidate order
};

struct RetrievalOutput {
    std::vector<ResultItem> items;
    RetrievalDetail detail;
};

/// The RETRIEVE pipeline: sparse candidates, pattern groups, three-way group
/// decision, per-event scoring, deduplication.
class Retriever {
public:
    Retriever(const EventStore& store, const SparseIndex& index, const Lexicon& lexicon, const Scorer& scorer,
              RetrievalConfig cfg = {});

    RetrievalOutput retrieve(std::string_view query, const SourceSet& sources = SourceSet::all()) const;

    const RetrievalConfig& config() const { return cfg_; }
    const EventStore& store() const { return *store_; }
    const Lexicon& lexicon() const { return *lexicon_; }

private:
    const EventStore* store_;
    const SparseIndex* index_;
    const Lexicon* lexicon_;
    const Scorer* scorer_;
    CoverageScorer fallback_;
    RetrievalConfig cfg_;
};

} // namespace optree
