#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "optree/error.hpp"
#include "optree/extract.hpp"
#include "optree/plan.hpp"
#include "optree/result.hpp"
#include "optree/retrieve.hpp"

namespace optree {

enum class ExecCause { type_mismatch, unknown_function, aggregate_on_non_numeric, invalid_plan };

std::string_view cause_name(ExecCause c);

/// Raised by expression evaluation and operator kernels; the engine wraps it
/// into an ExecError carrying the node id.
class EvalError : public Error {
public:
    EvalError(ExecCause cause, const std::string& message) : Error(message), cause_(cause) {}
    ExecCause cause() const noexcept { return cause_; }

private:
    ExecCause cause_;
};

struct EvalContext {
    const EventStore* store = nullptr;
    Date reference_date;
};

/// Evaluation scope: a single item (FILTER, MAP) or a pair (JOIN).
struct ExprScope {
    const ResultItem* item = nullptr;
    const ResultItem* left = nullptr;
    const ResultItem* right = nullptr;

    static ExprScope of(const ResultItem& item) { return ExprScope{&item, nullptr, nullptr}; }
    static ExprScope pair(const ResultItem& l, const ResultItem& r) { return ExprScope{nullptr, &l, &r}; }
};

/// Null doubles as Unknown. Throws EvalError.
Value eval_expr(const Expr& expr, const ExprScope& scope, const EvalContext& ctx);

// Operator kernels. Each throws EvalError on type problems.
std::vector<ResultItem> eval_filter(const std::vector<ResultItem>& items, const Expr& predicate,
                                    const EvalContext& ctx);
std::vector<ResultItem> eval_join(const std::vector<ResultItem>& left, const std::vector<ResultItem>& right,
                                  const Expr& predicate, const EvalContext& ctx);
std::vector<ResultItem> eval_group_by(const std::vector<ResultItem>& items, const std::vector<std::string>& keys,
                                      const EventStore& store);
std::vector<ResultItem> eval_unnest(const std::vector<ResultItem>& items);
std::vector<ResultItem> eval_map(const std::vector<ResultItem>& items, const std::vector<Assignment>& assignments,
                                 const EvalContext& ctx);

struct Answer {
    enum class Kind { scalar, items, empty };
    Kind kind = Kind::empty;
    Value scalar;
    std::vector<ResultItem> items;

    static Answer of(Value v) { return Answer{Kind::scalar, std::move(v), {}}; }
    static Answer of(std::vector<ResultItem> items) { return Answer{Kind::items, Value(), std::move(items)}; }
    static Answer none() { return Answer{}; }
    friend bool operator==(const Answer&, const Answer&) = default;
};

std::string_view answer_kind_name(Answer::Kind k);

Answer eval_apply(const std::vector<ResultItem>& items, const ApplyFn& fn, const EventStore& store);
/// SUM, AVG, MAX, MIN, ARGMAX or ARGMIN over `key`.
Answer eval_aggregate(Op op, const std::vector<ResultItem>& items, const std::string& key, const EventStore& store);

/// Display string: scalar value, group keys or event summaries joined by
/// "; ", or "no answer".
std::string render_answer(const Answer& answer, const EventStore& store);

struct TraceNode {
    std::string id;
    Op op = Op::retrieve;
    std::optional<std::string> sub_question;
    std::vector<std::size_t> n_in;
    std::size_t n_out = 0;
    std::vector<ResultItem> preview;
    std::optional<std::string> result; // scalar operators
    std::variant<std::monostate, RetrievalDetail, ExtractDetail> detail;
    std::vector<TraceNode> children;
    std::optional<std::string> error;

    std::size_t size() const;
};

struct EngineConfig {
    Date reference_date = make_date(2024, 11, 25);
    SourceSet sources = SourceSet::all();
    std::size_t preview_size = 5;

    void validate() const; // throws ConfigError
};

class ExecError : public Error {
public:
    ExecError(std::string node_id, ExecCause cause, const std::string& message)
        : Error("node " + node_id + ": " + message), node_id_(std::move(node_id)), cause_(cause) {}

    const std::string& node_id() const noexcept { return node_id_; }
    ExecCause cause() const noexcept { return cause_; }
    /// Trace of the nodes evaluated before the failure; the failing node
    /// carries the error message.
    const std::shared_ptr<const TraceNode>& partial_trace() const noexcept { return partial_; }
    void set_partial_trace(TraceNode trace) { partial_ = std::make_shared<const TraceNode>(std::move(trace)); }

private:
    std::string node_id_;
    ExecCause cause_;
    std::shared_ptr<const TraceNode> partial_;
};

struct NodeTiming {
    std::string node_id;
    double millis = 0;
};

struct ExecutionResult {
    Answer answer;
    TraceNode trace;
    std::vector<NodeTiming> timings;
};

class Engine {
public:
    Engine(const EventStore& store, const Retriever& retriever, const AliasTable& aliases, const Extractor& extractor)
        : store_(&store), retriever_(&retriever), aliases_(&aliases), extractor_(&extractor) {}

    /// Validates, then evaluates the tree bottom-up. Throws ExecError.
    ExecutionResult execute(const OperatorTree& tree, const EngineConfig& cfg = {}) const;

    const EventStore& store() const { return *store_; }

private:
    Answer run(const OperatorNode& node, const std::string& id, TraceNode& trace, const EngineConfig& cfg,
               std::vector<NodeTiming>& timings) const;

    const EventStore* store_;
    const Retriever* retriever_;
    const AliasTable* aliases_;
    const Extractor* extractor_;
};

} // namespace optree
