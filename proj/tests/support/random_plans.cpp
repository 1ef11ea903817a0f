#include "support/random_plans.hpp"

#include <algorithm>
#include <set>

namespace testsupport {

using namespace optree;

int pick(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool chance(Rng& rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

namespace {

template <typename T>
const T& one_of(Rng& rng, const std::vector<T>& xs) {
    return xs[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(xs.size()) - 1))];
}

const Date base_day = make_date(2024, 3, 1);

Value random_number(Rng& rng) {
    if (chance(rng, 0.6)) {
        return Value(pick(rng, 0, 4));
    }
    return Value(pick(rng, 0, 8) / 2.0);
}

Value random_text(Rng& rng) {
    static const std::vector<std::string> words = {"x", "X", "y", "yz", "Yz", "zz"};
    return Value(one_of(rng, words));
}

Value random_datetime(Rng& rng) {
    Date d{base_day.days + pick(rng, 0, 3)};
    if (chance(rng, 0.15)) {
        return Value(to_datetime(d));
    }
    return Value(make_datetime(d, pick(rng, 6, 21), pick(rng, 0, 1) * 30));
}

Value random_date(Rng& rng) {
    return Value(Date{base_day.days + pick(rng, 0, 3)});
}

} // namespace

EventStore random_store(Rng& rng, std::size_t n) {
    std::vector<Event> events;
    for (std::size_t i = 0; i < n; ++i) {
        Event e;
        e.id = "r" + std::to_string(i);
        e.persona = "p";
        e.source = all_source_kinds[static_cast<std::size_t>(pick(rng, 0, 7))];
        auto start = make_datetime(Date{base_day.days + pick(rng, 0, 3)}, pick(rng, 0, 22), 0);
        e.scope = TemporalScope{start, DateTime{start.minutes + pick(rng, 0, 90)}};
        if (chance(rng, 0.7)) {
            e.fields["a"] = Value(pick(rng, 0, 4));
        }
        if (chance(rng, 0.5)) {
            e.fields["s"] = random_text(rng);
        }
        if (chance(rng, 0.5) || e.fields.empty()) {
            e.fields["duration_min"] = Value(pick(rng, 10, 90));
        }
        events.push_back(std::move(e));
    }
    return EventStore(std::move(events));
}

Value random_value_for(Rng& rng, const std::string& key) {
    if (key == "a" || key == "duration_min") {
        return random_number(rng);
    }
    if (key == "f") {
        return Value(pick(rng, 0, 8) / 4.0);
    }
    if (key == "s") {
        return random_text(rng);
    }
    if (key == "t") {
        return random_datetime(rng);
    }
    if (key == "d") {
        return chance(rng, 0.8) ? random_date(rng) : random_datetime(rng);
    }
    return Value(pick(rng, 0, 3));
}

ResultItem random_item(Rng& rng, const EventStore& store, const ItemShape& shape) {
    ResultItem item;
    const int n_events = chance(rng, 0.7) ? 1 : pick(rng, 2, 3);
    for (int i = 0; i < n_events; ++i) {
        item.events.push_back(static_cast<EventRef>(pick(rng, 0, static_cast<int>(store.size()) - 1)));
    }
    for (const char* key : {"a", "f", "s", "t", "d"}) {
        if (chance(rng, shape.attr_presence)) {
            item.attrs[key] = chance(rng, shape.null_rate) ? Value() : random_value_for(rng, key);
        }
    }
    return item;
}

std::vector<ResultItem> random_items(Rng& rng, const EventStore& store, std::size_t max_items) {
    std::vector<ResultItem> items;
    const int n = pick(rng, 0, static_cast<int>(max_items));
    ItemShape shape;
    shape.attr_presence = std::uniform_real_distribution<double>(0.3, 1.0)(rng);
    for (int i = 0; i < n; ++i) {
        items.push_back(random_item(rng, store, shape));
    }
    return items;
}

std::vector<std::string> random_group_keys(Rng& rng) {
    static const std::vector<std::string> pool = {"a", "s", "d", "t", "duration_min", "missing"};
    std::vector<std::string> keys{one_of(rng, pool)};
    if (chance(rng, 0.35)) {
        auto second = one_of(rng, pool);
        if (second != keys[0]) {
            keys.push_back(second);
        }
    }
    return keys;
}

std::vector<ResultItem> random_grouped_items(Rng& rng, const EventStore& store, std::size_t max_items) {
    std::vector<ResultItem> items;
    const int n = pick(rng, 0, static_cast<int>(std::min<std::size_t>(max_items, 12)));
    for (int i = 0; i < n; ++i) {
        if (chance(rng, 0.25)) {
            items.push_back(random_item(rng, store));
            continue;
        }
        ResultItem group;
        group.group_keys = random_group_keys(rng);
        for (const auto& k : group.group_keys) {
            group.attrs[k] = random_value_for(rng, k);
        }
        if (chance(rng, 0.5)) {
            group.attrs["cnt"] = Value(pick(rng, 1, 5));
        }
        if (chance(rng, 0.3)) {
            group.attrs["f"] = random_value_for(rng, "f");
        }
        const int members = pick(rng, 1, 4);
        for (int m = 0; m < members; ++m) {
            auto member = random_item(rng, store);
            group.events.insert(group.events.end(), member.events.begin(), member.events.end());
            group.members.push_back(std::move(member));
        }
        items.push_back(std::move(group));
    }
    return items;
}

// ---------------------------------------------------------------------------
// Expressions over items
// ---------------------------------------------------------------------------

namespace {

enum class Family { number, text, time };

/// Operand of the given family. `side` selects left./right. references in
/// join scope; -1 means plain attribute references.
Expr operand(Rng& rng, Family fam, int side) {
    auto ref = [&](const std::string& key) {
        if (side < 0) {
            return Expr::attr(key);
        }
        int s = side == 2 ? pick(rng, 0, 1) : side;
        if (side == 2 && chance(rng, 0.15)) {
            return Expr::attr(key); // unqualified: left first, then right
        }
        return Expr::join_attr(s == 0 ? JoinSide::left : JoinSide::right, key);
    };
    switch (fam) {
    case Family::number:
        switch (pick(rng, 0, 5)) {
        case 0: return ref("a");
        case 1: return ref("f");
        case 2: return ref("duration_min");
        case 3: return Expr::call("+", {ref("a"), Expr::literal(Value(pick(rng, -1, 2)))});
        case 4: return Expr::literal(Value(pick(rng, 0, 4)));
        default: return Expr::literal(Value(pick(rng, 0, 8) / 2.0));
        }
    case Family::text:
        switch (pick(rng, 0, 3)) {
        case 0:
        case 1: return ref("s");
        case 2: return Expr::call("month", {ref("t")});
        default: return Expr::literal(random_text(rng));
        }
    case Family::time:
        switch (pick(rng, 0, 5)) {
        case 0:
        case 1: return ref("t");
        case 2: return ref("d");
        case 3: return Expr::call("date", {ref("t")});
        case 4: return Expr::literal(random_datetime(rng));
        default: return Expr::literal(random_date(rng));
        }
    }
    return Expr::literal(Value());
}

Expr comparison(Rng& rng, int side, double ill_typed) {
    static const std::vector<std::string> ops = {"eq", "ne", "lt", "le", "gt", "ge"};
    auto fam = static_cast<Family>(pick(rng, 0, 2));
    auto other = fam;
    if (chance(rng, ill_typed)) {
        other = static_cast<Family>((static_cast<int>(fam) + 1) % 3);
    }
    int ls = side == 2 ? 0 : side;
    int rs = side == 2 ? 1 : side;
    if (side == 2 && chance(rng, 0.3)) {
        std::swap(ls, rs);
    }
    return Expr::call(one_of(rng, ops), {operand(rng, fam, ls), operand(rng, other, rs)});
}

Expr atom(Rng& rng, int side, double ill_typed) {
    int ls = side == 2 ? 0 : side;
    int rs = side == 2 ? 1 : side;
    switch (pick(rng, 0, 6)) {
    case 0:
        if (chance(rng, ill_typed)) {
            return Expr::call("contains", {operand(rng, Family::number, ls), Expr::literal(Value("x"))});
        }
        return Expr::call("contains", {operand(rng, Family::text, ls), Expr::literal(random_text(rng))});
    case 1:
        if (chance(rng, ill_typed)) {
            return Expr::call("same_day", {operand(rng, Family::text, ls), operand(rng, Family::time, rs)});
        }
        return Expr::call("same_day", {operand(rng, Family::time, ls), operand(rng, Family::time, rs)});
    case 2:
        return Expr::call("within", {operand(rng, Family::time, ls), operand(rng, Family::time, rs),
                                     Expr::literal(Value(Duration{pick(rng, 0, 4) * 180}))});
    case 3:
        if (chance(rng, 0.3)) {
            return Expr::literal(Value(chance(rng, 0.5)));
        }
        return comparison(rng, side, ill_typed);
    default: return comparison(rng, side, ill_typed);
    }
}

Expr predicate(Rng& rng, int side, double ill_typed, int depth) {
    if (depth <= 0 || chance(rng, 0.45)) {
        return atom(rng, side, ill_typed);
    }
    switch (pick(rng, 0, 2)) {
    case 0: return Expr::call("not", {predicate(rng, side, ill_typed, depth - 1)});
    default: {
        std::vector<Expr> args;
        const int n = pick(rng, 2, 3);
        for (int i = 0; i < n; ++i) {
            args.push_back(predicate(rng, side, ill_typed, depth - 1));
        }
        return Expr::call(chance(rng, 0.5) ? "and" : "or", std::move(args));
    }
    }
}

} // namespace

Expr random_item_predicate(Rng& rng, double ill_typed) {
    return predicate(rng, -1, ill_typed, 2);
}

Expr random_join_predicate(Rng& rng, double ill_typed) {
    auto body = predicate(rng, 2, ill_typed, 2);
    // Lead with an equality or same-day conjunct half of the time so the
    // engine's partitioned path is exercised too.
    if (chance(rng, 0.5)) {
        Expr lead;
        switch (pick(rng, 0, 3)) {
        case 0:
            lead = Expr::call("eq", {Expr::join_attr(JoinSide::left, "a"), Expr::join_attr(JoinSide::right, "a")});
            break;
        case 1:
            lead = Expr::call("eq", {Expr::join_attr(JoinSide::right, "s"), Expr::join_attr(JoinSide::left, "s")});
            break;
        case 2:
            lead = Expr::call("same_day",
                              {Expr::join_attr(JoinSide::left, "t"), Expr::join_attr(JoinSide::right, "d")});
            break;
        default:
            lead = Expr::call("eq", {Expr::join_attr(JoinSide::left, "d"), Expr::join_attr(JoinSide::right, "t")});
            break;
        }
        if (chance(rng, 0.3)) {
            return lead;
        }
        return Expr::call("and", {std::move(lead), std::move(body)});
    }
    return body;
}

std::vector<Assignment> random_assignments(Rng& rng, bool groups) {
    static const std::vector<std::string> targets = {"a", "f", "s", "c", "y", "m", "n", "t"};
    std::vector<Assignment> out;
    const int n = pick(rng, 0, 3);
    for (int i = 0; i < n; ++i) {
        Expr e;
        switch (pick(rng, 0, 7)) {
        case 0: e = Expr::call("+", {Expr::attr("a"), Expr::literal(Value(1))}); break;
        case 1: e = Expr::call("*", {Expr::attr("f"), Expr::literal(Value(2))}); break;
        case 2: e = Expr::call("year", {Expr::attr("t")}); break;
        case 3: e = Expr::call("month", {Expr::attr("d")}); break;
        case 4:
            e = groups && chance(rng, 0.7) ? Expr::call("len", {Expr::group_ref()})
                                           : Expr::call("len", {Expr::attr("s")});
            break;
        case 5: e = Expr::call("-", {Expr::attr("t"), Expr::attr("d")}); break;
        case 6: e = random_item_predicate(rng, 0.03); break;
        default: e = Expr::literal(random_value_for(rng, "a")); break;
        }
        out.push_back(Assignment{one_of(rng, targets), std::move(e)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Random plans
// ---------------------------------------------------------------------------

namespace {

std::string random_phrase(Rng& rng) {
    static const std::vector<std::string> words = {"my",   "workouts", "italian", "food", "in",   "2024",
                                                   "\"q\"", "back\\slash", "taylor", "swift", "a\nb", "tab\tx",
                                                   "ünï",  "(paren)", "[br]", "#hash", "?", ";semi"};
    std::string out;
    const int n = pick(rng, 1, 4);
    for (int i = 0; i < n; ++i) {
        if (i) {
            out += ' ';
        }
        out += one_of(rng, words);
    }
    return out;
}

std::optional<std::string> maybe_annotation(Rng& rng) {
    if (chance(rng, 0.3)) {
        return random_phrase(rng);
    }
    return std::nullopt;
}

std::string random_key(Rng& rng) {
    static const std::vector<std::string> keys = {"workout_type", "date",  "month", "start_time", "end_time",
                                                  "artist",       "price", "x1",    "_tmp",       "l.date"};
    return one_of(rng, keys);
}

Value random_literal(Rng& rng) {
    switch (pick(rng, 0, 9)) {
    case 0: return Value();
    case 1: return Value(chance(rng, 0.5));
    case 2: return Value(pick(rng, -1000, 1000));
    case 3: return Value(static_cast<std::int64_t>(rng() >> 2));
    case 4: return Value(pick(rng, -400, 400) / 8.0);
    case 5: return Value(std::ldexp(static_cast<double>(pick(rng, 1, 1000)), pick(rng, -60, 60)));
    case 6: return Value(random_phrase(rng));
    case 7: return Value(Date{pick(rng, 0, 30000)});
    case 8: return Value(make_datetime(Date{pick(rng, 0, 30000)}, pick(rng, 0, 23), pick(rng, 0, 59)));
    default: return Value(Duration{pick(rng, 0, 5000)});
    }
}

Expr random_expr(Rng& rng, int depth, bool in_join, bool groups) {
    if (depth <= 0 || chance(rng, 0.35)) {
        switch (pick(rng, 0, 4)) {
        case 0: return Expr::literal(random_literal(rng));
        case 1:
            if (in_join) {
                return Expr::join_attr(chance(rng, 0.5) ? JoinSide::left : JoinSide::right, random_key(rng));
            }
            return Expr::attr(random_key(rng));
        case 2: return Expr::ref_date();
        case 3:
            if (groups) {
                return Expr::group_ref();
            }
            return Expr::attr(random_key(rng));
        default: return Expr::attr(random_key(rng));
        }
    }
    static const std::vector<std::pair<std::string, int>> fns = {
        {"eq", 2},   {"ne", 2},       {"lt", 2},       {"le", 2},     {"gt", 2},    {"ge", 2},
        {"and", 3},  {"or", 2},       {"not", 1},      {"contains", 2}, {"same_day", 2}, {"within", 3},
        {"year", 1}, {"month", 1},    {"date", 1},     {"weekday", 1}, {"len", 1},   {"+", 2},
        {"-", 2},    {"*", 2},        {"/", 2},        {"list", 2},
    };
    const auto& [name, arity] = one_of(rng, fns);
    std::vector<Expr> args;
    for (int i = 0; i < arity; ++i) {
        args.push_back(random_expr(rng, depth - 1, in_join, groups));
    }
    return Expr::call(name, std::move(args));
}

std::vector<std::string> random_keys(Rng& rng) {
    std::vector<std::string> keys;
    const int n = pick(rng, 1, 3);
    for (int i = 0; i < n; ++i) {
        keys.push_back(random_key(rng));
    }
    return keys;
}

OperatorNode random_list_node(Rng& rng, int depth) {
    if (depth <= 0) {
        return make_retrieve(random_phrase(rng), maybe_annotation(rng));
    }
    OperatorNode n;
    switch (pick(rng, 0, 9)) {
    case 0: n = make_retrieve(random_phrase(rng)); break;
    case 1: n = make_extract(random_list_node(rng, depth - 1), random_keys(rng)); break;
    case 2: n = make_filter(random_list_node(rng, depth - 1), random_expr(rng, 3, false, false)); break;
    case 3:
        n = make_join(random_list_node(rng, depth - 1), random_list_node(rng, depth - 1),
                      random_expr(rng, 3, true, false));
        break;
    case 4: n = make_group_by(random_list_node(rng, depth - 1), random_keys(rng)); break;
    case 5: n = make_unnest(random_list_node(rng, depth - 1)); break;
    case 6: {
        auto child = random_list_node(rng, depth - 1);
        const bool groups = child.op == Op::group_by;
        std::vector<Assignment> assignments;
        const int k = pick(rng, 0, 3);
        for (int i = 0; i < k; ++i) {
            assignments.push_back(Assignment{random_key(rng), random_expr(rng, 2, false, groups)});
        }
        n = make_map(std::move(child), std::move(assignments));
        break;
    }
    case 7: n = make_aggregate(Op::argmax, random_list_node(rng, depth - 1), random_key(rng)); break;
    case 8: n = make_aggregate(Op::argmin, random_list_node(rng, depth - 1), random_key(rng)); break;
    default: {
        auto child = make_group_by(random_list_node(rng, depth - 1), random_keys(rng));
        n = make_filter(std::move(child), random_expr(rng, 2, false, true));
        break;
    }
    }
    n.sub_question = maybe_annotation(rng);
    return n;
}

} // namespace

OperatorTree random_tree(Rng& rng, int max_depth) {
    const int depth = pick(rng, 0, max_depth);
    if (chance(rng, 0.5)) {
        return random_list_node(rng, depth);
    }
    OperatorNode root;
    switch (pick(rng, 0, 5)) {
    case 0: root = make_apply(random_list_node(rng, depth), ApplyFn{ApplyFn::Kind::len, {}}); break;
    case 1: root = make_apply(random_list_node(rng, depth), ApplyFn{ApplyFn::Kind::distinct, random_key(rng)}); break;
    case 2: root = make_aggregate(Op::sum, random_list_node(rng, depth), random_key(rng)); break;
    case 3: root = make_aggregate(Op::avg, random_list_node(rng, depth), random_key(rng)); break;
    case 4: root = make_aggregate(Op::max, random_list_node(rng, depth), random_key(rng)); break;
    default: root = make_aggregate(Op::min, random_list_node(rng, depth), random_key(rng)); break;
    }
    root.sub_question = maybe_annotation(rng);
    return root;
}

std::string mutate_plan_text(Rng& rng, const std::string& text) {
    static const std::string alphabet = "()[]#?\":=,;.-+dt0123456789 \n\\xyzAPPLYRETRIEVE";
    std::string s = text;
    const int edits = pick(rng, 1, 4);
    for (int e = 0; e < edits; ++e) {
        const auto size = static_cast<int>(s.size());
        const int at = size == 0 ? 0 : pick(rng, 0, size - 1);
        switch (pick(rng, 0, 5)) {
        case 0:
            if (size > 0) {
                s.erase(static_cast<std::size_t>(at), static_cast<std::size_t>(pick(rng, 1, 6)));
            }
            break;
        case 1:
            s.insert(s.begin() + at, alphabet[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(alphabet.size()) - 1))]);
            break;
        case 2: s.resize(static_cast<std::size_t>(at)); break;
        case 3: {
            auto p = s.find_first_of("()[]\"", static_cast<std::size_t>(at));
            if (p != std::string::npos) {
                static const std::string swaps = "][)(\"";
                s[p] = swaps[static_cast<std::size_t>(pick(rng, 0, 4))];
            }
            break;
        }
        case 4: s.insert(static_cast<std::size_t>(at), std::string(static_cast<std::size_t>(pick(rng, 1, 40)), '(')); break;
        default: {
            static const std::vector<std::string> junk = {"(FROB x)", ":=", "?\"", "#\"", "d\"2024-13-40\"",
                                                          "dur\"zz\"", "(eq)", "1e", "-", "\\q"};
            s.insert(static_cast<std::size_t>(at), one_of(rng, junk));
            break;
        }
        }
    }
    return s;
}

} // namespace testsupport
