#include "optree/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <unordered_map>

namespace optree {

std::string_view cause_name(ExecCause c) {
    switch (c) {
    case ExecCause::type_mismatch: return "TypeMismatch";
    case ExecCause::unknown_function: return "UnknownFunction";
    case ExecCause::aggregate_on_non_numeric: return "AggregateOnNonNumeric";
    case ExecCause::invalid_plan: return "InvalidPlan";
    }
    return "?";
}

std::string_view answer_kind_name(Answer::Kind k) {
    switch (k) {
    case Answer::Kind::scalar: return "scalar";
    case Answer::Kind::items: return "items";
    case Answer::Kind::empty: return "empty";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void mismatch(std::string_view fn, const Value& a, const Value& b) {
    throw EvalError(ExecCause::type_mismatch, std::string(fn) + " cannot combine " +
                                                  std::string(kind_name(a.kind())) + " and " +
                                                  std::string(kind_name(b.kind())));
}

[[noreturn]] void mismatch(std::string_view fn, const Value& a) {
    throw EvalError(ExecCause::type_mismatch,
                    std::string(fn) + " does not accept " + std::string(kind_name(a.kind())));
}

void check_args(const Expr& e, std::size_t lo, std::size_t hi) {
    if (e.args.size() < lo || e.args.size() > hi) {
        throw EvalError(ExecCause::unknown_function,
                        e.name + " called with " + std::to_string(e.args.size()) + " arguments");
    }
}

/// Bool or Null (Unknown); anything else is a type error.
std::optional<bool> truth(std::string_view fn, const Value& v) {
    if (v.is_null()) {
        return std::nullopt;
    }
    if (v.kind() != Value::Kind::Bool) {
        mismatch(fn, v);
    }
    return v.as_bool();
}

Value comparison(const std::string& fn, const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) {
        return Value();
    }
    auto o = compare(a, b);
    if (o == Ordering::unknown) {
        mismatch(fn, a, b);
    }
    if (fn == "eq") return Value(o == Ordering::equal);
    if (fn == "ne") return Value(o != Ordering::equal);
    if (fn == "lt") return Value(o == Ordering::less);
    if (fn == "le") return Value(o != Ordering::greater);
    if (fn == "gt") return Value(o == Ordering::greater);
    return Value(o != Ordering::less); // ge
}

Value arithmetic(const std::string& fn, const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) {
        return Value();
    }
    using K = Value::Kind;
    if (a.is_numeric() && b.is_numeric()) {
        if (fn == "/") {
            double d = b.to_double();
            return d == 0.0 ? Value() : Value(a.to_double() / d);
        }
        if (a.kind() == K::Int && b.kind() == K::Int) {
            auto x = a.as_int();
            auto y = b.as_int();
            if (fn == "+") return Value(x + y);
            if (fn == "-") return Value(x - y);
            return Value(x * y);
        }
        double x = a.to_double();
        double y = b.to_double();
        if (fn == "+") return Value(x + y);
        if (fn == "-") return Value(x - y);
        return Value(x * y);
    }
    if (fn == "-" && a.is_temporal() && b.is_temporal()) {
        return Value(Duration{a.to_datetime().minutes - b.to_datetime().minutes});
    }
    if (a.kind() == K::Duration && b.kind() == K::Duration && (fn == "+" || fn == "-")) {
        auto x = a.as_duration().minutes;
        auto y = b.as_duration().minutes;
        return Value(Duration{fn == "+" ? x + y : x - y});
    }
    if (a.is_temporal() && b.kind() == K::Duration && (fn == "+" || fn == "-")) {
        auto m = b.as_duration().minutes;
        return Value(DateTime{a.to_datetime().minutes + (fn == "+" ? m : -m)});
    }
    if (fn == "+" && a.kind() == K::Duration && b.is_temporal()) {
        return Value(DateTime{b.to_datetime().minutes + a.as_duration().minutes});
    }
    mismatch(fn, a, b);
}

Value contains(const Value& hay, const Value& needle) {
    if (hay.is_null() || needle.is_null()) {
        return Value();
    }
    if (hay.kind() == Value::Kind::List) {
        const auto& list = hay.as_list();
        return Value(std::any_of(list.begin(), list.end(), [&](const Value& v) { return equivalent(v, needle); }));
    }
    if (hay.kind() == Value::Kind::Str && needle.kind() == Value::Kind::Str) {
        return Value(ascii_lower(hay.as_str()).find(ascii_lower(needle.as_str())) != std::string::npos);
    }
    mismatch("contains", hay, needle);
}

Value calendar(const std::string& fn, const Value& v) {
    if (v.is_null()) {
        return Value();
    }
    if (!v.is_temporal()) {
        mismatch(fn, v);
    }
    Date d = date_of(v.to_datetime());
    if (fn == "year") return Value(std::int64_t{civil(d).year});
    if (fn == "month") return Value(month_key(d));
    if (fn == "date") return Value(d);
    return Value(weekday_name(d));
}

Value resolve_attr(const std::string& key, const ExprScope& scope, const EvalContext& ctx) {
    if (scope.item) {
        return lookup(*scope.item, key, *ctx.store);
    }
    auto v = lookup(*scope.left, key, *ctx.store);
    return v.is_null() ? lookup(*scope.right, key, *ctx.store) : v;
}

} // namespace

Value eval_expr(const Expr& e, const ExprScope& scope, const EvalContext& ctx) {
    switch (e.kind) {
    case Expr::Kind::literal: return e.value;
    case Expr::Kind::ref_date: return Value(ctx.reference_date);
    case Expr::Kind::attr: return resolve_attr(e.name, scope, ctx);
    case Expr::Kind::join_attr: {
        const ResultItem* side = e.side == JoinSide::left ? scope.left : scope.right;
        if (!side) {
            throw EvalError(ExecCause::type_mismatch, "left./right. reference outside JOIN");
        }
        return lookup(*side, e.name, *ctx.store);
    }
    case Expr::Kind::group: {
        if (!scope.item || !scope.item->is_group()) {
            return Value();
        }
        Value::List members;
        for (const auto& m : scope.item->members) {
            members.emplace_back(m.events.empty() ? std::string() : (*ctx.store)[m.events.front()].id);
        }
        return Value(std::move(members));
    }
    case Expr::Kind::call: break;
    }

    const auto& fn = e.name;
    auto arg = [&](std::size_t i) { return eval_expr(e.args[i], scope, ctx); };

    if (fn == "and" || fn == "or") {
        check_args(e, 2, e.args.size() < 2 ? 2 : e.args.size());
        const bool dominant = fn == "or"; // value that decides the result
        bool unknown = false;
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            auto t = truth(fn, arg(i));
            if (!t) {
                unknown = true;
            } else if (*t == dominant) {
                return Value(dominant);
            }
        }
        return unknown ? Value() : Value(!dominant);
    }
    if (fn == "not") {
        check_args(e, 1, 1);
        auto t = truth(fn, arg(0));
        return t ? Value(!*t) : Value();
    }
    if (fn == "eq" || fn == "ne" || fn == "lt" || fn == "le" || fn == "gt" || fn == "ge") {
        check_args(e, 2, 2);
        return comparison(fn, arg(0), arg(1));
    }
    if (fn == "+" || fn == "-" || fn == "*" || fn == "/") {
        check_args(e, 2, 2);
        return arithmetic(fn, arg(0), arg(1));
    }
    if (fn == "contains") {
        check_args(e, 2, 2);
        return contains(arg(0), arg(1));
    }
    if (fn == "same_day") {
        check_args(e, 2, 2);
        auto a = arg(0);
        auto b = arg(1);
        if (a.is_null() || b.is_null()) {
            return Value();
        }
        if (!a.is_temporal() || !b.is_temporal()) {
            mismatch(fn, a, b);
        }
        return Value(date_of(a.to_datetime()) == date_of(b.to_datetime()));
    }
    if (fn == "within") {
        check_args(e, 3, 3);
        auto a = arg(0);
        auto b = arg(1);
        auto d = arg(2);
        if (a.is_null() || b.is_null() || d.is_null()) {
            return Value();
        }
        if (!a.is_temporal() || !b.is_temporal()) {
            mismatch(fn, a, b);
        }
        if (d.kind() != Value::Kind::Duration) {
            mismatch(fn, d);
        }
        return Value(std::llabs(a.to_datetime().minutes - b.to_datetime().minutes) <= d.as_duration().minutes);
    }
    if (fn == "year" || fn == "month" || fn == "date" || fn == "weekday") {
        check_args(e, 1, 1);
        return calendar(fn, arg(0));
    }
    if (fn == "len") {
        check_args(e, 1, 1);
        auto v = arg(0);
        if (v.is_null()) {
            return Value();
        }
        if (v.kind() == Value::Kind::List) {
            return Value(static_cast<std::int64_t>(v.as_list().size()));
        }
        if (v.kind() == Value::Kind::Str) {
            return Value(static_cast<std::int64_t>(v.as_str().size()));
        }
        mismatch(fn, v);
    }
    if (fn == "list") {
        Value::List out;
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            out.push_back(arg(i));
        }
        return Value(std::move(out));
    }
    throw EvalError(ExecCause::unknown_function, "unknown function '" + fn + "'");
}

// ---------------------------------------------------------------------------
// Operator kernels
// ---------------------------------------------------------------------------

std::vector<ResultItem> eval_filter(const std::vector<ResultItem>& items, const Expr& predicate,
                                    const EvalContext& ctx) {
    std::vector<ResultItem> out;
    for (const auto& item : items) {
        auto v = eval_expr(predicate, ExprScope::of(item), ctx);
        if (truth("FILTER predicate", v).value_or(false)) {
            out.push_back(item);
        }
    }
    return out;
}

namespace {

ResultItem join_pair(const ResultItem& l, const ResultItem& r) {
    ResultItem out;
    out.events = l.events;
    out.events.insert(out.events.end(), r.events.begin(), r.events.end());
    for (const auto& [k, v] : l.attrs) {
        if (r.attrs.contains(k)) {
            out.attrs.emplace("l." + k, v);
        } else {
            out.attrs.emplace(k, v);
        }
    }
    for (const auto& [k, v] : r.attrs) {
        if (l.attrs.contains(k)) {
            out.attrs.emplace("r." + k, v);
        } else {
            out.attrs.emplace(k, v);
        }
    }
    return out;
}

/// Equality-style first conjunct usable for hash partitioning.
struct JoinKey {
    bool by_day = false; // same_day: compare calendar dates
    std::string left_key;
    std::string right_key;
};

std::optional<JoinKey> join_key(const Expr& predicate) {
    const Expr* first = &predicate;
    if (first->kind == Expr::Kind::call && first->name == "and" && !first->args.empty()) {
        first = &first->args.front();
    }
    if (first->kind != Expr::Kind::call || (first->name != "eq" && first->name != "same_day") ||
        first->args.size() != 2) {
        return std::nullopt;
    }
    const auto& a = first->args[0];
    const auto& b = first->args[1];
    if (a.kind != Expr::Kind::join_attr || b.kind != Expr::Kind::join_attr || a.side == b.side) {
        return std::nullopt;
    }
    JoinKey key;
    key.by_day = first->name == "same_day";
    key.left_key = a.side == JoinSide::left ? a.name : b.name;
    key.right_key = a.side == JoinSide::left ? b.name : a.name;
    return key;
}

enum class KeyFamily { unset, temporal, other, mixed };

/// Partition key of one side, or nullopt when partitioning could change the
/// observable behavior (Null keys, non-temporal same_day, mixed families).
std::optional<std::vector<Value>> partition_keys(const std::vector<ResultItem>& items, const std::string& key,
                                                 bool by_day, KeyFamily& family, const EventStore& store) {
    std::vector<Value> keys;
    keys.reserve(items.size());
    for (const auto& item : items) {
        auto v = lookup(item, key, store);
        if (v.is_null()) {
            return std::nullopt;
        }
        if (by_day) {
            if (!v.is_temporal()) {
                return std::nullopt;
            }
            v = Value(date_of(v.to_datetime()));
        }
        KeyFamily f = v.is_temporal() ? KeyFamily::temporal : KeyFamily::other;
        if (f == KeyFamily::other && family == KeyFamily::other && !keys.empty() && !comparable(keys.front(), v)) {
            return std::nullopt;
        }
        if (family == KeyFamily::unset) {
            family = f;
        } else if (family != f) {
            return std::nullopt;
        }
        keys.push_back(std::move(v));
    }
    return keys;
}

} // namespace

std::vector<ResultItem> eval_join(const std::vector<ResultItem>& left, const std::vector<ResultItem>& right,
                                  const Expr& predicate, const EvalContext& ctx) {
    std::vector<ResultItem> out;
    auto keep = [&](const ResultItem& l, const ResultItem& r) {
        auto v = eval_expr(predicate, ExprScope::pair(l, r), ctx);
        if (truth("JOIN predicate", v).value_or(false)) {
            out.push_back(join_pair(l, r));
        }
    };

    if (auto jk = join_key(predicate); jk && !left.empty() && !right.empty()) {
        KeyFamily family = KeyFamily::unset;
        auto lkeys = partition_keys(left, jk->left_key, jk->by_day, family, *ctx.store);
        auto rkeys = lkeys ? partition_keys(right, jk->right_key, jk->by_day, family, *ctx.store) : std::nullopt;
        if (lkeys && rkeys && comparable(lkeys->front(), rkeys->front())) {
            std::unordered_multimap<std::size_t, std::size_t> buckets;
            for (std::size_t j = 0; j < rkeys->size(); ++j) {
                buckets.emplace(hash_value((*rkeys)[j]), j);
            }
            std::vector<std::size_t> matches;
            for (std::size_t i = 0; i < left.size(); ++i) {
                matches.clear();
                auto [lo, hi] = buckets.equal_range(hash_value((*lkeys)[i]));
                for (auto it = lo; it != hi; ++it) {
                    if (equivalent((*lkeys)[i], (*rkeys)[it->second])) {
                        matches.push_back(it->second);
                    }
                }
                std::sort(matches.begin(), matches.end());
                for (auto j : matches) {
                    keep(left[i], right[j]);
                }
            }
            return out;
        }
    }

    for (const auto& l : left) {
        for (const auto& r : right) {
            keep(l, r);
        }
    }
    return out;
}

std::vector<ResultItem> eval_group_by(const std::vector<ResultItem>& items, const std::vector<std::string>& keys,
                                      const EventStore& store) {
    std::vector<ResultItem> groups;
    std::vector<std::vector<Value>> tuples;
    std::unordered_multimap<std::size_t, std::size_t> index;
    for (const auto& item : items) {
        std::vector<Value> tuple;
        std::size_t h = 0x9e3779b9;
        for (const auto& k : keys) {
            tuple.push_back(lookup(item, k, store));
            h ^= hash_value(tuple.back()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        std::optional<std::size_t> slot;
        auto [lo, hi] = index.equal_range(h);
        for (auto it = lo; it != hi && !slot; ++it) {
            const auto& other = tuples[it->second];
            if (std::equal(tuple.begin(), tuple.end(), other.begin(),
                           [](const Value& a, const Value& b) { return equivalent(a, b); })) {
                slot = it->second;
            }
        }
        if (!slot) {
            slot = groups.size();
            index.emplace(h, *slot);
            ResultItem g;
            g.group_keys = keys;
            for (std::size_t i = 0; i < keys.size(); ++i) {
                g.attrs.insert_or_assign(keys[i], tuple[i]);
            }
            groups.push_back(std::move(g));
            tuples.push_back(std::move(tuple));
        }
        auto& g = groups[*slot];
        g.events.insert(g.events.end(), item.events.begin(), item.events.end());
        g.members.push_back(item);
    }
    return groups;
}

std::vector<ResultItem> eval_unnest(const std::vector<ResultItem>& items) {
    std::vector<ResultItem> out;
    for (const auto& item : items) {
        if (!item.is_group()) {
            out.push_back(item);
            continue;
        }
        for (auto member : item.members) {
            for (const auto& [k, v] : item.attrs) {
                if (std::find(item.group_keys.begin(), item.group_keys.end(), k) == item.group_keys.end()) {
                    member.attrs.emplace(k, v); // member attrs win
                }
            }
            out.push_back(std::move(member));
        }
    }
    return out;
}

std::vector<ResultItem> eval_map(const std::vector<ResultItem>& items, const std::vector<Assignment>& assignments,
                                 const EvalContext& ctx) {
    std::vector<ResultItem> out = items;
    for (auto& item : out) {
        for (const auto& a : assignments) {
            auto v = eval_expr(a.expr, ExprScope::of(item), ctx);
            item.attrs.insert_or_assign(a.key, std::move(v));
        }
    }
    return out;
}

Answer eval_apply(const std::vector<ResultItem>& items, const ApplyFn& fn, const EventStore& store) {
    if (fn.kind == ApplyFn::Kind::len) {
        return Answer::of(Value(static_cast<std::int64_t>(items.size())));
    }
    std::vector<Value> seen;
    std::unordered_multimap<std::size_t, std::size_t> index;
    for (const auto& item : items) {
        auto v = lookup(item, fn.key, store);
        if (v.is_null()) {
            continue;
        }
        auto h = hash_value(v);
        auto [lo, hi] = index.equal_range(h);
        if (std::none_of(lo, hi, [&](auto& p) { return equivalent(seen[p.second], v); })) {
            index.emplace(h, seen.size());
            seen.push_back(std::move(v));
        }
    }
    return Answer::of(Value(static_cast<std::int64_t>(seen.size())));
}

namespace {

DateTime first_start(const ResultItem& item, const EventStore& store) {
    if (item.events.empty()) {
        return DateTime{std::numeric_limits<std::int64_t>::max()};
    }
    return store[item.events.front()].scope.start;
}

} // namespace

Answer eval_aggregate(Op op, const std::vector<ResultItem>& items, const std::string& key, const EventStore& store) {
    std::vector<std::size_t> present;
    std::vector<Value> values;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto v = lookup(items[i], key, store);
        if (!v.is_null()) {
            present.push_back(i);
            values.push_back(std::move(v));
        }
    }

    if (op == Op::sum || op == Op::avg) {
        bool all_int = true;
        std::int64_t isum = 0;
        double fsum = 0;
        for (const auto& v : values) {
            if (!v.is_numeric()) {
                throw EvalError(ExecCause::aggregate_on_non_numeric,
                                std::string(op_name(op)) + " over " + std::string(kind_name(v.kind())) + " values of '" +
                                    key + "'");
            }
            if (v.kind() == Value::Kind::Int) {
                isum += v.as_int();
            } else {
                all_int = false;
            }
            fsum += v.to_double();
        }
        if (op == Op::sum) {
            return Answer::of(all_int ? Value(isum) : Value(fsum));
        }
        if (values.empty()) {
            return Answer::none();
        }
        double total = all_int ? static_cast<double>(isum) : fsum;
        return Answer::of(Value(total / static_cast<double>(values.size())));
    }

    if (op == Op::max || op == Op::min || op == Op::argmax || op == Op::argmin) {
        const bool want_max = op == Op::max || op == Op::argmax;
        std::size_t best = 0;
        for (std::size_t i = 1; i < values.size(); ++i) {
            auto o = compare(values[i], values[best]);
            if (o == Ordering::unknown) {
                mismatch(op_name(op), values[best], values[i]);
            }
            if ((want_max && o == Ordering::greater) || (!want_max && o == Ordering::less)) {
                best = i;
            }
        }
        if (op == Op::max || op == Op::min) {
            return values.empty() ? Answer::none() : Answer::of(values[best]);
        }
        std::vector<ResultItem> winners;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (compare(values[i], values[best]) == Ordering::equal) {
                winners.push_back(items[present[i]]);
            }
        }
        std::stable_sort(winners.begin(), winners.end(), [&](const ResultItem& a, const ResultItem& b) {
            return first_start(a, store) < first_start(b, store);
        });
        return Answer::of(std::move(winners));
    }
    throw EvalError(ExecCause::invalid_plan, std::string(op_name(op)) + " is not an aggregate");
}

std::string render_answer(const Answer& answer, const EventStore& store) {
    switch (answer.kind) {
    case Answer::Kind::scalar: return render(answer.scalar);
    case Answer::Kind::empty: return "no answer";
    case Answer::Kind::items: break;
    }
    if (answer.items.empty()) {
        return "no answer";
    }
    std::string out;
    for (const auto& item : answer.items) {
        if (!out.empty()) {
            out += "; ";
        }
        out += summarize(item, store);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

std::size_t TraceNode::size() const {
    std::size_t n = 1;
    for (const auto& c : children) {
        n += c.size();
    }
    return n;
}

void EngineConfig::validate() const {
    if (sources.empty()) {
        throw ConfigError("at least one source must be enabled");
    }
}

namespace {

const std::vector<ResultItem>& items_of(const Answer& a) {
    static const std::vector<ResultItem> none;
    return a.kind == Answer::Kind::items ? a.items : none;
}

} // namespace

ExecutionResult Engine::execute(const OperatorTree& tree, const EngineConfig& cfg) const {
    cfg.validate();
    ExecutionResult result;
    for (const auto& d : validate_plan(tree)) {
        if (d.severity == Diagnostic::Severity::error) {
            ExecError err(d.node_id, ExecCause::invalid_plan, d.message);
            TraceNode root;
            root.id = "1";
            root.op = tree.op;
            root.sub_question = tree.sub_question;
            root.error = d.message;
            err.set_partial_trace(std::move(root));
            throw err;
        }
    }
    try {
        result.answer = run(tree, "1", result.trace, cfg, result.timings);
    } catch (ExecError& e) {
        e.set_partial_trace(result.trace);
        throw;
    }
    return result;
}

Answer Engine::run(const OperatorNode& node, const std::string& id, TraceNode& trace, const EngineConfig& cfg,
                   std::vector<NodeTiming>& timings) const {
    trace.id = id;
    trace.op = node.op;
    trace.sub_question = node.sub_question;

    std::vector<Answer> inputs;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        trace.children.emplace_back();
        inputs.push_back(run(node.children[i], child_id(id, i), trace.children.back(), cfg, timings));
        trace.n_in.push_back(items_of(inputs.back()).size());
    }

    const auto started = std::chrono::steady_clock::now();
    const EvalContext ctx{store_, cfg.reference_date};
    Answer out;
    try {
        switch (node.op) {
        case Op::retrieve: {
            auto r = retriever_->retrieve(node.query, cfg.sources);
            trace.detail = std::move(r.detail);
            out = Answer::of(std::move(r.items));
            break;
        }
        case Op::extract: {
            auto items = items_of(inputs[0]);
            ExtractDetail detail;
            extract_attributes(items, node.keys, *store_, *aliases_, *extractor_, &detail);
            trace.detail = std::move(detail);
            out = Answer::of(std::move(items));
            break;
        }
        case Op::filter: out = Answer::of(eval_filter(items_of(inputs[0]), *node.predicate, ctx)); break;
        case Op::join:
            out = Answer::of(eval_join(items_of(inputs[0]), items_of(inputs[1]), *node.predicate, ctx));
            break;
        case Op::group_by: out = Answer::of(eval_group_by(items_of(inputs[0]), node.keys, *store_)); break;
        case Op::unnest: out = Answer::of(eval_unnest(items_of(inputs[0]))); break;
        case Op::map: out = Answer::of(eval_map(items_of(inputs[0]), node.assignments, ctx)); break;
        case Op::apply: out = eval_apply(items_of(inputs[0]), node.fn, *store_); break;
        case Op::sum:
        case Op::avg:
        case Op::max:
        case Op::min:
        case Op::argmax:
        case Op::argmin: out = eval_aggregate(node.op, items_of(inputs[0]), node.key, *store_); break;
        case Op::hole:
            throw EvalError(ExecCause::invalid_plan, "unresolved placeholder");
        }
    } catch (const EvalError& e) {
        trace.error = std::string(cause_name(e.cause())) + ": " + e.what();
        throw ExecError(id, e.cause(), e.what());
    }

    if (out.kind == Answer::Kind::items) {
        trace.n_out = out.items.size();
        auto n = std::min(cfg.preview_size, out.items.size());
        trace.preview.assign(out.items.begin(), out.items.begin() + static_cast<std::ptrdiff_t>(n));
        if (is_scalar_op(node.op) || node.op == Op::argmax || node.op == Op::argmin) {
            trace.result = render_answer(out, *store_);
        }
    } else {
        trace.n_out = out.kind == Answer::Kind::scalar ? 1 : 0;
        trace.result = render_answer(out, *store_);
    }
    timings.push_back(NodeTiming{
        id, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count()});
    return out;
}

} // namespace optree
