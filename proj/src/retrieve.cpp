#include "optree/retrieve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace optree {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        fn(line_no, line);
    }
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) {
            out += sep;
        }
        out += tokens[i];
    }
    return out;
}

void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

} // namespace

// ---------------------------------------------------------------------------
// Lexicon
// ---------------------------------------------------------------------------

Lexicon Lexicon::parse(std::string_view stopwords, std::string_view expansions) {
    Lexicon lex;
    for_each_line(stopwords, [&](std::size_t, std::string_view line) {
        for (auto& tok : tokenize(line)) {
            lex.add_stopword(tok);
        }
    });
    for_each_line(expansions, [&](std::size_t line_no, std::string_view line) {
        auto tab = line.find('\t');
        if (tab == std::string_view::npos) {
            throw ParseError(line_no, "expansion line needs 'phrase<TAB>token,token'");
        }
        std::vector<std::string> tokens;
        for (auto& t : tokenize(line.substr(tab + 1))) {
            tokens.push_back(std::move(t));
        }
        if (tokenize(line.substr(0, tab)).empty() || tokens.empty()) {
            throw ParseError(line_no, "empty expansion phrase or token list");
        }
        lex.add_expansion(line.substr(0, tab), tokens);
    });
    return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& stopwords, const std::filesystem::path& expansions) {
    return parse(read_file(stopwords), read_file(expansions));
}

void Lexicon::add_stopword(std::string_view word) {
    stopwords_.insert(ascii_lower(word));
}

void Lexicon::add_expansion(std::string_view phrase, const std::vector<std::string>& tokens) {
    auto phrase_tokens = tokenize(phrase);
    if (phrase_tokens.empty()) {
        return;
    }
    auto& accepted = expansions_[join(phrase_tokens, " ")];
    for (const auto& t : tokens) {
        for (auto& tok : tokenize(t)) {
            accepted.push_back(std::move(tok));
        }
    }
    sort_unique(accepted);
    longest_phrase_ = std::max(longest_phrase_, phrase_tokens.size());
}

void Lexicon::merge(const Lexicon& other) {
    for (const auto& w : other.stopwords_) {
        stopwords_.insert(w);
    }
    for (const auto& [phrase, tokens] : other.expansions_) {
        add_expansion(phrase, tokens);
    }
}

bool Lexicon::is_stopword(std::string_view token) const {
    return stopwords_.contains(std::string(token));
}

std::vector<std::string> Lexicon::content_tokens(std::string_view query) const {
    std::vector<std::string> out;
    for (auto& t : tokenize(query)) {
        if (!is_stopword(t)) {
            out.push_back(std::move(t));
        }
    }
    return out;
}

std::vector<QueryUnit> Lexicon::analyze(std::string_view query) const {
    auto tokens = tokenize(query);
    std::vector<QueryUnit> units;
    std::size_t i = 0;
    while (i < tokens.size()) {
        bool matched = false;
        for (std::size_t len = std::min(longest_phrase_, tokens.size() - i); len >= 1; --len) {
            std::vector<std::string> window(tokens.begin() + i, tokens.begin() + i + len);
            auto it = expansions_.find(join(window, " "));
            if (it != expansions_.end()) {
                units.push_back(QueryUnit{it->first, it->second});
                i += len;
                matched = true;
                break;
            }
        }
        if (matched) {
            continue;
        }
        if (!is_stopword(tokens[i])) {
            units.push_back(QueryUnit{tokens[i], {tokens[i]}});
        }
        ++i;
    }
    return units;
}

std::vector<std::string> Lexicon::expanded_terms(std::string_view query) const {
    std::vector<std::string> terms;
    for (auto& unit : analyze(query)) {
        terms.insert(terms.end(), unit.accepted.begin(), unit.accepted.end());
    }
    sort_unique(terms);
    return terms;
}

std::string Lexicon::stopwords_text() const {
    std::vector<std::string> words(stopwords_.begin(), stopwords_.end());
    std::sort(words.begin(), words.end());
    std::string out;
    for (const auto& w : words) {
        out += w + "\n";
    }
    return out;
}

std::string Lexicon::expansions_text() const {
    std::string out;
    for (const auto& [phrase, tokens] : expansions_) {
        out += phrase + "\t" + join(tokens, ",") + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scorers
// ---------------------------------------------------------------------------

double CoverageScorer::score(std::string_view query, std::string_view verbalization) const {
    auto units = lexicon_->analyze(query);
    if (units.empty()) {
        return 0.0;
    }
    auto doc = tokenize(verbalization);
    std::unordered_set<std::string_view> present(doc.begin(), doc.end());
    auto accepts = [](const QueryUnit& u, std::string_view tok) {
        return std::binary_search(u.accepted.begin(), u.accepted.end(), tok);
    };

    std::size_t satisfied = 0;
    for (const auto& u : units) {
        if (std::any_of(u.accepted.begin(), u.accepted.end(),
                        [&](const std::string& t) { return present.contains(t); })) {
            ++satisfied;
        }
    }
    double coverage = static_cast<double>(satisfied) / static_cast<double>(units.size());

    bool adjacent = false;
    for (std::size_t u = 0; u + 1 < units.size() && !adjacent; ++u) {
        for (std::size_t i = 0; i + 1 < doc.size(); ++i) {
            if (accepts(units[u], doc[i]) && accepts(units[u + 1], doc[i + 1])) {
                adjacent = true;
                break;
            }
        }
    }
    return std::min(1.0, coverage + (adjacent ? phrase_bonus : 0.0));
}

double score_event(const Event& event, std::string_view query, const Scorer& scorer) {
    return scorer.score(query, verbalize(event));
}

// ---------------------------------------------------------------------------
// Sparse index
// ---------------------------------------------------------------------------

SparseIndex SparseIndex::build(const EventStore& store) {
    SparseIndex index;
    index.doc_lengths_.reserve(store.size());
    std::uint64_t total = 0;
    for (EventRef r = 0; r < store.size(); ++r) {
        auto tokens = tokenize(store.verbalization(r));
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total += tokens.size();
        // Preserve first-occurrence order so term ids are deterministic.
        std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;
        for (const auto& tok : tokens) {
            auto [it, inserted] =
                index.vocabulary_.try_emplace(tok, static_cast<std::uint32_t>(index.postings_.size()));
            if (inserted) {
                index.postings_.emplace_back();
            }
            auto found = std::find_if(counts.begin(), counts.end(), [&](auto& c) { return c.first == it->second; });
            if (found == counts.end()) {
                counts.emplace_back(it->second, 1);
            } else {
                ++found->second;
            }
        }
        for (auto [term, tf] : counts) {
            index.postings_[term].push_back(Posting{r, tf});
        }
    }
    index.avg_doc_length_ = store.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(store.size());
    return index;
}

std::optional<std::uint32_t> SparseIndex::term_id(std::string_view token) const {
    auto it = vocabulary_.find(std::string(token));
    if (it == vocabulary_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::span<const SparseIndex::Posting> SparseIndex::postings(std::string_view token) const {
    auto id = term_id(token);
    if (!id) {
        return {};
    }
    return postings_[*id];
}

std::vector<ScoredEvent> SparseIndex::score(const EventStore& store, std::span<const std::string> terms,
                                            std::size_t k, const Bm25Params& params,
                                            const SourceSet& sources) const {
    const double n = static_cast<double>(doc_count());
    std::vector<double> acc(doc_count(), 0.0);
    std::vector<EventRef> touched;
    std::vector<std::string> distinct(terms.begin(), terms.end());
    sort_unique(distinct);
    for (const auto& term : distinct) {
        auto list = postings(term);
        if (list.empty()) {
            continue;
        }
        const double df = static_cast<double>(list.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& p : list) {
            const double tf = p.tf;
            const double norm = 1.0 - params.b + params.b * doc_lengths_[p.doc] / avg_doc_length_;
            if (acc[p.doc] == 0.0) {
                touched.push_back(p.doc);
            }
            acc[p.doc] += idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
        }
    }
    std::vector<ScoredEvent> out;
    out.reserve(touched.size());
    for (auto r : touched) {
        if (acc[r] > 0.0 && sources.contains(store[r].source)) {
            out.push_back(ScoredEvent{r, acc[r]});
        }
    }
    auto better = [&](const ScoredEvent& a, const ScoredEvent& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return store[a.ref].id < store[b.ref].id;
    };
    if (out.size() > k) {
        std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), better);
        out.resize(k);
    } else {
        std::sort(out.begin(), out.end(), better);
    }
    return out;
}

SparseIndex build_index(const EventStore& store) {
    return SparseIndex::build(store);
}

std::vector<ScoredEvent> sparse_score(const SparseIndex& index, const EventStore& store, const Lexicon& lexicon,
                                      std::string_view query, std::size_t k, const Bm25Params& params,
                                      const SourceSet& sources) {
    auto terms = lexicon.expanded_terms(query);
    return index.score(store, terms, k, params, sources);
}

// ---------------------------------------------------------------------------
// Grouping and classification
// ---------------------------------------------------------------------------

PatternSignature signature_of(const Event& e) {
    PatternSignature sig;
    sig.source = e.source;
    for (const auto& [key, value] : e.fields) {
        sig.keys.push_back(key);
    }
    return sig;
}

std::string to_string(const PatternSignature& sig) {
    return std::string(source_name(sig.source)) + "[" + join(sig.keys, ",") + "]";
}

std::vector<CandidateGroup> group_candidates(std::span<const ScoredEvent> candidates, const EventStore& store) {
    std::vector<CandidateGroup> groups;
    std::map<PatternSignature, std::size_t> slot;
    for (const auto& c : candidates) {
        auto sig = signature_of(store[c.ref]);
        auto [it, inserted] = slot.try_emplace(sig, groups.size());
        if (inserted) {
            groups.push_back(CandidateGroup{std::move(sig), {}});
        }
        groups[it->second].members.push_back(c);
    }
    // Candidates arrive best-first, so first-appearance order is best-score order.
    return groups;
}

void RetrievalConfig::validate() const {
    if (!(0.0 <= tau_lo && tau_lo < tau_hi && tau_hi <= 1.0)) {
        throw ConfigError("retrieval thresholds must satisfy 0 <= tau_lo < tau_hi <= 1");
    }
    if (top_k < 1 || representatives < 1) {
        throw ConfigError("retrieval top_k and representatives must be >= 1");
    }
    if (tau < 0.0 || tau > 1.0) {
        throw ConfigError("retrieval tau must lie in [0, 1]");
    }
}

std::string_view decision_name(GroupDecision::Kind k) {
    switch (k) {
    case GroupDecision::Kind::drop_all: return "DROP_ALL";
    case GroupDecision::Kind::retain_all: return "RETAIN_ALL";
    case GroupDecision::Kind::score_each: return "SCORE_EACH";
    }
    return "?";
}

GroupDecision classify_group(const CandidateGroup& group, std::string_view query, const Scorer& scorer,
                             const RetrievalConfig& cfg, const EventStore& store) {
    GroupDecision decision;
    const std::size_t n = std::min(cfg.representatives, group.members.size());
    try {
        for (std::size_t i = 0; i < n; ++i) {
            auto ref = group.members[i].ref;
            decision.representatives.push_back(ScoredEvent{ref, scorer.score(query, store.verbalization(ref))});
        }
    } catch (const ScorerUnavailable&) {
        decision.kind = GroupDecision::Kind::score_each;
        decision.scorer_failed = true;
        decision.representatives.clear();
        return decision;
    }
    const auto& reps = decision.representatives;
    if (reps.empty()) {
        decision.kind = GroupDecision::Kind::score_each;
    } else if (std::all_of(reps.begin(), reps.end(), [&](auto& r) { return r.score >= cfg.tau_hi; })) {
        decision.kind = GroupDecision::Kind::retain_all;
    } else if (std::all_of(reps.begin(), reps.end(), [&](auto& r) { return r.score <= cfg.tau_lo; })) {
        decision.kind = GroupDecision::Kind::drop_all;
    } else {
        decision.kind = GroupDecision::Kind::score_each;
    }
    return decision;
}

// ---------------------------------------------------------------------------
// Deduplication
// ---------------------------------------------------------------------------

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent_[std::max(a, b)] = std::min(a, b);
        }
    }

private:
    std::vector<std::size_t> parent_;
};

} // namespace

std::vector<ResultItem> deduplicate(std::span<const EventRef> retained, const EventStore& store) {
    std::vector<EventRef> refs(retained.begin(), retained.end());
    std::sort(refs.begin(), refs.end());
    refs.erase(std::unique(refs.begin(), refs.end()), refs.end());

    // Store order is start order, so a sweep over refs visits intervals by start.
    DisjointSets sets(refs.size());
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto& cur = store[refs[i]];
        std::erase_if(active, [&](std::size_t j) { return store[refs[j]].scope.end < cur.scope.start; });
        for (auto j : active) {
            const auto& other = store[refs[j]];
            if (other.source != cur.source && temporal_overlap(other.scope, cur.scope)) {
                sets.unite(i, j);
            }
        }
        active.push_back(i);
    }

    std::map<std::size_t, std::vector<EventRef>> components;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        components[sets.find(i)].push_back(refs[i]);
    }

    std::vector<ResultItem> items;
    items.reserve(components.size());
    for (auto& [root, members] : components) {
        std::stable_sort(members.begin(), members.end(), [&](EventRef a, EventRef b) {
            return dedup_priority(store[a].source) < dedup_priority(store[b].source);
        });
        ResultItem item;
        item.events = std::move(members);
        if (item.events.size() > 1) {
            for (const auto& [k, v] : store[item.events.front()].fields) {
                item.attrs.emplace(k, v);
            }
        }
        items.push_back(std::move(item));
    }
    std::sort(items.begin(), items.end(),
              [](const ResultItem& a, const ResultItem& b) { return a.events.front() < b.events.front(); });
    return items;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

Retriever::Retriever(const EventStore& store, const SparseIndex& index, const Lexicon& lexicon,
                     const Scorer& scorer, RetrievalConfig cfg)
    : store_(&store), index_(&index), lexicon_(&lexicon), scorer_(&scorer), fallback_(lexicon), cfg_(cfg) {
    cfg_.validate();
}

RetrievalOutput Retriever::retrieve(std::string_view query, const SourceSet& sources) const {
    RetrievalOutput out;
    auto& detail = out.detail;
    detail.query = std::string(query);
    detail.expanded_terms = lexicon_->expanded_terms(query);

    auto candidates = index_->score(*store_, detail.expanded_terms, cfg_.top_k, cfg_.bm25, sources);
    auto groups = group_candidates(candidates, *store_);

    std::vector<EventRef> kept;
    for (const auto& group : groups) {
        auto decision = classify_group(group, query, *scorer_, cfg_, *store_);
        detail.groups.push_back(RetrievedGroupDetail{group.signature, decision.kind, group.members.size()});

        for (const auto& member : group.members) {
            RetrievedEventDetail ev;
            ev.ref = member.ref;
            ev.sparse_score = member.score;
            auto rep = std::find_if(decision.representatives.begin(), decision.representatives.end(),
                                    [&](const ScoredEvent& r) { return r.ref == member.ref; });
            if (rep != decision.representatives.end()) {
                ev.classifier_score = rep->score;
            }
            switch (decision.kind) {
            case GroupDecision::Kind::retain_all:
                ev.by_pattern = true;
                ev.retained = true;
                break;
            case GroupDecision::Kind::drop_all:
                ev.by_pattern = true;
                ev.retained = false;
                break;
            case GroupDecision::Kind::score_each: {
                if (!ev.classifier_score) {
                    const auto& text = store_->verbalization(member.ref);
                    try {
                        ev.classifier_score = scorer_->score(query, text);
                    } catch (const ScorerUnavailable&) {
                        ev.classifier_score = fallback_.score(query, text);
                    }
                }
                ev.retained = *ev.classifier_score >= cfg_.tau;
                break;
            }
            }
            if (ev.retained) {
                kept.push_back(member.ref);
            }
            detail.events.push_back(ev);
        }
    }

    if (cfg_.dedup) {
        out.items = deduplicate(kept, *store_);
    } else {
        std::sort(kept.begin(), kept.end());
        for (auto r : kept) {
            out.items.push_back(ResultItem{{r}, {}, {}, {}});
        }
    }
    return out;
}

} // namespace optree
