#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optree/error.hpp"
#include "optree/value.hpp"

namespace optree {

/// Byte offsets into the plan text; [begin, end).
struct SourceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

enum class JoinSide { left, right };

/// Prefix expression used by FILTER, JOIN and MAP.
struct Expr {
    enum class Kind {
        literal,   // value
        attr,      // plain key, possibly namespaced like `l.date`
        join_attr, // `left.key` / `right.key`
        group,     // member list of a GROUP_BY item
        ref_date,  // REF_DATE
        call,      // (name args...)
    };

    Kind kind = Kind::literal;
    Value value;
    std::string name;
    JoinSide side = JoinSide::left;
    std::vector<Expr> args;
    SourceSpan span;

    static Expr literal(Value v);
    static Expr attr(std::string key);
    static Expr join_attr(JoinSide side, std::string key);
    static Expr group_ref();
    static Expr ref_date();
    static Expr call(std::string name, std::vector<Expr> args);
};

enum class Op {
    retrieve,
    extract,
    filter,
    join,
    group_by,
    unnest,
    map,
    apply,
    sum,
    avg,
    max,
    min,
    argmax,
    argmin,
    hole, // placeholder for an undecomposed sub-question (incremental planning only)
};

std::string_view op_name(Op op);
std::optional<Op> parse_op_name(std::string_view name);
/// Number of child operators the operator takes.
std::size_t op_arity(Op op);
/// APPLY, SUM, AVG, MAX and MIN produce a scalar rather than a result list.
bool is_scalar_op(Op op);

struct Assignment {
    std::string key;
    Expr expr;
};

struct ApplyFn {
    enum class Kind { len, distinct };
    Kind kind = Kind::len;
    std::string key; // distinct only
};

struct OperatorNode {
    Op op = Op::retrieve;
    std::optional<std::string> sub_question;
    std::vector<OperatorNode> children;

    std::string query;                   // RETRIEVE
    std::vector<std::string> keys;       // EXTRACT (sorted, unique) and GROUP_BY (ordered)
    std::optional<Expr> predicate;       // FILTER, JOIN
    std::vector<Assignment> assignments; // MAP
    ApplyFn fn;                          // APPLY
    std::string key;                     // SUM..ARGMIN
    SourceSpan span;

    std::size_t size() const; // node count
    std::size_t depth() const;
};

using OperatorTree = OperatorNode;

// Node factories; EXTRACT keys are canonicalized (sorted, deduplicated).
OperatorNode make_retrieve(std::string query, std::optional<std::string> sub_question = std::nullopt);
OperatorNode make_hole(std::string sub_question);
OperatorNode make_extract(OperatorNode child, std::vector<std::string> keys);
OperatorNode make_filter(OperatorNode child, Expr predicate);
OperatorNode make_join(OperatorNode left, OperatorNode right, Expr predicate);
OperatorNode make_group_by(OperatorNode child, std::vector<std::string> keys);
OperatorNode make_unnest(OperatorNode child);
OperatorNode make_map(OperatorNode child, std::vector<Assignment> assignments);
OperatorNode make_apply(OperatorNode child, ApplyFn fn);
OperatorNode make_aggregate(Op op, OperatorNode child, std::string key);

/// Equality ignoring source spans. Annotations are compared unless
/// `compare_annotations` is false.
bool structurally_equal(const Expr& a, const Expr& b);
bool structurally_equal(const OperatorNode& a, const OperatorNode& b, bool compare_annotations = true);

/// Hierarchical node ids: root "1", its children "1.1", "1.2", ...
std::string child_id(std::string_view parent, std::size_t index);

class PlanError : public Error {
public:
    enum class Kind { syntax, arity, unknown_operator };

    PlanError(Kind kind, SourceSpan span, std::string message, std::string expected = {});

    Kind kind() const noexcept { return kind_; }
    SourceSpan span() const noexcept { return span_; }
    std::size_t position() const noexcept { return span_.begin; }
    const std::string& expected() const noexcept { return expected_; }

private:
    Kind kind_;
    SourceSpan span_;
    std::string expected_;
};

struct ParseOptions {
    /// Accept `?"sub-question"` placeholders where a child operator is expected.
    bool allow_holes = false;
    std::size_t max_depth = 256;
};

/// Parses the s-expression plan syntax. Throws PlanError.
OperatorTree parse_plan(std::string_view text, const ParseOptions& options = {});
/// Parses a standalone expression. Throws PlanError.
Expr parse_expr(std::string_view text);

/// Canonical multi-line rendering; parse_plan(serialize_plan(t)) == t.
std::string serialize_plan(const OperatorTree& tree);
/// Single-line prefix rendering of an expression.
std::string serialize_expr(const Expr& expr);

struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string node_id;
    std::string message;
    SourceSpan span;
};

std::vector<Diagnostic> validate_plan(const OperatorTree& tree);
bool has_errors(const std::vector<Diagnostic>& diagnostics);

} // namespace optree
