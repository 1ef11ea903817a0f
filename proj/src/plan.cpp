#include "optree/plan.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <set>

namespace optree {

// ---------------------------------------------------------------------------
// AST helpers
// ---------------------------------------------------------------------------

namespace {

struct OpInfo {
    Op op;
    std::string_view name;
    std::size_t arity;
};

constexpr std::array<OpInfo, 15> op_table = {{
    {Op::retrieve, "RETRIEVE", 0},
    {Op::extract, "EXTRACT", 1},
    {Op::filter, "FILTER", 1},
    {Op::join, "JOIN", 2},
    {Op::group_by, "GROUP_BY", 1},
    {Op::unnest, "UNNEST", 1},
    {Op::map, "MAP", 1},
    {Op::apply, "APPLY", 1},
    {Op::sum, "SUM", 1},
    {Op::avg, "AVG", 1},
    {Op::max, "MAX", 1},
    {Op::min, "MIN", 1},
    {Op::argmax, "ARGMAX", 1},
    {Op::argmin, "ARGMIN", 1},
    {Op::hole, "?", 0},
}};

struct FnInfo {
    std::string_view name;
    std::size_t min_args;
    std::size_t max_args;
};

constexpr std::size_t unbounded = static_cast<std::size_t>(-1);

constexpr std::array<FnInfo, 22> fn_table = {{
    {"eq", 2, 2},       {"ne", 2, 2},   {"lt", 2, 2},    {"le", 2, 2},      {"gt", 2, 2},
    {"ge", 2, 2},       {"and", 2, unbounded},           {"or", 2, unbounded},
    {"not", 1, 1},      {"contains", 2, 2},              {"same_day", 2, 2},
    {"within", 3, 3},   {"year", 1, 1}, {"month", 1, 1}, {"date", 1, 1},    {"weekday", 1, 1},
    {"len", 1, 1},      {"+", 2, 2},    {"-", 2, 2},     {"*", 2, 2},       {"/", 2, 2},
    {"list", 0, unbounded},
}};

const FnInfo* find_fn(std::string_view name) {
    for (const auto& f : fn_table) {
        if (f.name == name) {
            return &f;
        }
    }
    return nullptr;
}

bool is_key_segment(std::string_view s) {
    if (s.empty() || !((s[0] >= 'a' && s[0] <= 'z') || s[0] == '_')) {
        return false;
    }
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; });
}

/// Plain attribute key: `snake_case` or one namespace prefix like `l.date`.
bool is_attr_key(std::string_view s) {
    auto dot = s.find('.');
    if (dot == std::string_view::npos) {
        return is_key_segment(s);
    }
    return is_key_segment(s.substr(0, dot)) && is_key_segment(s.substr(dot + 1));
}

} // namespace

Expr Expr::literal(Value v) {
    Expr e;
    e.kind = Kind::literal;
    e.value = std::move(v);
    return e;
}

Expr Expr::attr(std::string key) {
    Expr e;
    e.kind = Kind::attr;
    e.name = std::move(key);
    return e;
}

Expr Expr::join_attr(JoinSide side, std::string key) {
    Expr e;
    e.kind = Kind::join_attr;
    e.side = side;
    e.name = std::move(key);
    return e;
}

Expr Expr::group_ref() {
    Expr e;
    e.kind = Kind::group;
    return e;
}

Expr Expr::ref_date() {
    Expr e;
    e.kind = Kind::ref_date;
    return e;
}

Expr Expr::call(std::string name, std::vector<Expr> args) {
    Expr e;
    e.kind = Kind::call;
    e.name = std::move(name);
    e.args = std::move(args);
    return e;
}

std::string_view op_name(Op op) {
    return op_table[static_cast<std::size_t>(op)].name;
}

std::optional<Op> parse_op_name(std::string_view name) {
    for (const auto& info : op_table) {
        if (info.name == name && info.op != Op::hole) {
            return info.op;
        }
    }
    return std::nullopt;
}

std::size_t op_arity(Op op) {
    return op_table[static_cast<std::size_t>(op)].arity;
}

bool is_scalar_op(Op op) {
    return op == Op::apply || op == Op::sum || op == Op::avg || op == Op::max || op == Op::min;
}

std::size_t OperatorNode::size() const {
    std::size_t n = 1;
    for (const auto& c : children) {
        n += c.size();
    }
    return n;
}

std::size_t OperatorNode::depth() const {
    std::size_t d = 0;
    for (const auto& c : children) {
        d = std::max(d, c.depth());
    }
    return d + 1;
}

OperatorNode make_retrieve(std::string query, std::optional<std::string> sub_question) {
    OperatorNode n;
    n.op = Op::retrieve;
    n.query = std::move(query);
    n.sub_question = std::move(sub_question);
    return n;
}

OperatorNode make_hole(std::string sub_question) {
    OperatorNode n;
    n.op = Op::hole;
    n.sub_question = std::move(sub_question);
    return n;
}

OperatorNode make_extract(OperatorNode child, std::vector<std::string> keys) {
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    OperatorNode n;
    n.op = Op::extract;
    n.children.push_back(std::move(child));
    n.keys = std::move(keys);
    return n;
}

OperatorNode make_filter(OperatorNode child, Expr predicate) {
    OperatorNode n;
    n.op = Op::filter;
    n.children.push_back(std::move(child));
    n.predicate = std::move(predicate);
    return n;
}

OperatorNode make_join(OperatorNode left, OperatorNode right, Expr predicate) {
    OperatorNode n;
    n.op = Op::join;
    n.children.push_back(std::move(left));
    n.children.push_back(std::move(right));
    n.predicate = std::move(predicate);
    return n;
}

OperatorNode make_group_by(OperatorNode child, std::vector<std::string> keys) {
    OperatorNode n;
    n.op = Op::group_by;
    n.children.push_back(std::move(child));
    n.keys = std::move(keys);
    return n;
}

OperatorNode make_unnest(OperatorNode child) {
    OperatorNode n;
    n.op = Op::unnest;
    n.children.push_back(std::move(child));
    return n;
}

OperatorNode make_map(OperatorNode child, std::vector<Assignment> assignments) {
    OperatorNode n;
    n.op = Op::map;
    n.children.push_back(std::move(child));
    n.assignments = std::move(assignments);
    return n;
}

OperatorNode make_apply(OperatorNode child, ApplyFn fn) {
    OperatorNode n;
    n.op = Op::apply;
    n.children.push_back(std::move(child));
    n.fn = std::move(fn);
    return n;
}

OperatorNode make_aggregate(Op op, OperatorNode child, std::string key) {
    OperatorNode n;
    n.op = op;
    n.children.push_back(std::move(child));
    n.key = std::move(key);
    return n;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind || a.name != b.name || !(a.value == b.value) || a.args.size() != b.args.size()) {
        return false;
    }
    if (a.kind == Expr::Kind::join_attr && a.side != b.side) {
        return false;
    }
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (!structurally_equal(a.args[i], b.args[i])) {
            return false;
        }
    }
    return true;
}

bool structurally_equal(const OperatorNode& a, const OperatorNode& b, bool compare_annotations) {
    if (a.op != b.op || a.children.size() != b.children.size()) {
        return false;
    }
    if (compare_annotations || a.op == Op::hole) {
        if (a.sub_question != b.sub_question) {
            return false;
        }
    }
    if (a.query != b.query || a.keys != b.keys || a.key != b.key) {
        return false;
    }
    if (a.fn.kind != b.fn.kind || a.fn.key != b.fn.key) {
        return false;
    }
    if (a.predicate.has_value() != b.predicate.has_value() ||
        (a.predicate && !structurally_equal(*a.predicate, *b.predicate))) {
        return false;
    }
    if (a.assignments.size() != b.assignments.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.assignments.size(); ++i) {
        if (a.assignments[i].key != b.assignments[i].key ||
            !structurally_equal(a.assignments[i].expr, b.assignments[i].expr)) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.children.size(); ++i) {
        if (!structurally_equal(a.children[i], b.children[i], compare_annotations)) {
            return false;
        }
    }
    return true;
}

std::string child_id(std::string_view parent, std::size_t index) {
    return std::string(parent) + "." + std::to_string(index + 1);
}

PlanError::PlanError(Kind kind, SourceSpan span, std::string message, std::string expected)
    : Error("at " + std::to_string(span.begin) + ": " + message), kind_(kind), span_(span),
      expected_(std::move(expected)) {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace {

enum class Tok { lparen, rparen, lbracket, rbracket, comma, assign, hash, question, string, typed, symbol, number, eof };

struct Token {
    Tok kind = Tok::eof;
    std::string text;   // decoded string body, symbol or number spelling
    std::string prefix; // d / dt / dur for typed literals
    SourceSpan span;
};

[[noreturn]] void syntax_error(SourceSpan span, std::string message, std::string expected = {}) {
    throw PlanError(PlanError::Kind::syntax, span, std::move(message), std::move(expected));
}

bool is_symbol_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_symbol_char(char c) {
    return is_symbol_start(c) || (c >= '0' && c <= '9') || c == '.';
}

bool is_digit(char c) {
    return c >= '0' && c <= '9';
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            if (pos_ >= src_.size()) {
                out.push_back(Token{Tok::eof, {}, {}, {pos_, pos_}});
                return out;
            }
            out.push_back(next());
        }
    }

private:
    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ';') {
                while (pos_ < src_.size() && src_[pos_] != '\n') {
                    ++pos_;
                }
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos_;
            } else {
                return;
            }
        }
    }

    Token single(Tok kind) {
        Token t{kind, std::string(1, src_[pos_]), {}, {pos_, pos_ + 1}};
        ++pos_;
        return t;
    }

    Token next() {
        char c = src_[pos_];
        switch (c) {
        case '(': return single(Tok::lparen);
        case ')': return single(Tok::rparen);
        case '[': return single(Tok::lbracket);
        case ']': return single(Tok::rbracket);
        case ',': return single(Tok::comma);
        case '#': return single(Tok::hash);
        case '?': return single(Tok::question);
        case '"': return string_token(pos_);
        case ':':
            if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
                pos_ += 2;
                return Token{Tok::assign, ":=", {}, {pos_ - 2, pos_}};
            }
            syntax_error({pos_, pos_ + 1}, "unexpected ':'", ":=");
        default: break;
        }
        if (is_digit(c) || (c == '-' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
            return number_token();
        }
        if (c == '+' || c == '-' || c == '*' || c == '/') {
            return single(Tok::symbol);
        }
        if (is_symbol_start(c)) {
            std::size_t start = pos_;
            while (pos_ < src_.size() && is_symbol_char(src_[pos_])) {
                ++pos_;
            }
            std::string sym(src_.substr(start, pos_ - start));
            if (pos_ < src_.size() && src_[pos_] == '"' && (sym == "d" || sym == "dt" || sym == "dur")) {
                Token t = string_token(start);
                t.kind = Tok::typed;
                t.prefix = sym;
                return t;
            }
            return Token{Tok::symbol, std::move(sym), {}, {start, pos_}};
        }
        syntax_error({pos_, pos_ + 1}, std::string("unexpected character '") + c + "'");
    }

    Token string_token(std::size_t start) {
        ++pos_; // opening quote
        std::string body;
        while (pos_ < src_.size() && src_[pos_] != '"') {
            char c = src_[pos_];
            if (c == '\\') {
                if (pos_ + 1 >= src_.size()) {
                    break;
                }
                char e = src_[pos_ + 1];
                switch (e) {
                case '"': body += '"'; break;
                case '\\': body += '\\'; break;
                case 'n': body += '\n'; break;
                case 't': body += '\t'; break;
                case 'r': body += '\r'; break;
                default: syntax_error({pos_, pos_ + 2}, "unknown escape sequence", "one of \\\" \\\\ \\n \\t \\r");
                }
                pos_ += 2;
            } else {
                body += c;
                ++pos_;
            }
        }
        if (pos_ >= src_.size()) {
            syntax_error({start, src_.size()}, "unterminated string", "\"");
        }
        ++pos_; // closing quote
        return Token{Tok::string, std::move(body), {}, {start, pos_}};
    }

    Token number_token() {
        std::size_t start = pos_;
        if (src_[pos_] == '-') {
            ++pos_;
        }
        while (pos_ < src_.size() && is_digit(src_[pos_])) {
            ++pos_;
        }
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' && is_digit(src_[pos_ + 1])) {
            ++pos_;
            while (pos_ < src_.size() && is_digit(src_[pos_])) {
                ++pos_;
            }
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
                ++pos_;
            }
            if (pos_ < src_.size() && is_digit(src_[pos_])) {
                while (pos_ < src_.size() && is_digit(src_[pos_])) {
                    ++pos_;
                }
            } else {
                pos_ = save;
            }
        }
        if (pos_ < src_.size() && is_symbol_char(src_[pos_])) {
            syntax_error({start, pos_ + 1}, "malformed number");
        }
        return Token{Tok::number, std::string(src_.substr(start, pos_ - start)), {}, {start, pos_}};
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

std::string describe(const Token& t) {
    switch (t.kind) {
    case Tok::eof: return "end of input";
    case Tok::string: return "string";
    case Tok::typed: return "typed literal";
    case Tok::number: return "number '" + t.text + "'";
    default: return "'" + t.text + "'";
    }
}

bool is_upper_symbol(const Token& t) {
    return t.kind == Tok::symbol && !t.text.empty() && t.text[0] >= 'A' && t.text[0] <= 'Z' && t.text != "REF_DATE";
}

class Parser {
public:
    Parser(std::string_view src, const ParseOptions& options) : tokens_(Lexer(src).run()), options_(options) {}

    OperatorNode plan() {
        auto root = node(0);
        expect_end();
        return root;
    }

    Expr standalone_expr() {
        auto e = expr(0, false);
        expect_end();
        return e;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
    }

    const Token& advance() {
        const Token& t = tokens_[pos_];
        if (t.kind != Tok::eof) {
            ++pos_;
        }
        return t;
    }

    const Token& expect(Tok kind, std::string_view what) {
        if (peek().kind != kind) {
            syntax_error(peek().span, "expected " + std::string(what) + ", found " + describe(peek()),
                         std::string(what));
        }
        return advance();
    }

    void expect_end() {
        if (peek().kind != Tok::eof) {
            syntax_error(peek().span, "unexpected " + describe(peek()) + " after plan", "end of input");
        }
    }

    void check_depth(std::size_t depth) {
        if (depth > options_.max_depth) {
            syntax_error(peek().span, "nesting too deep");
        }
    }

    bool at_node_start() const {
        if (peek().kind == Tok::question) {
            return true;
        }
        return peek().kind == Tok::lparen && is_upper_symbol(peek(1));
    }

    OperatorNode child(std::size_t depth, const Token& head, std::size_t index, std::size_t arity) {
        if (options_.allow_holes && peek().kind == Tok::question) {
            std::size_t start = advance().span.begin;
            const auto& body = expect(Tok::string, "placeholder sub-question string");
            auto n = make_hole(body.text);
            n.span = {start, body.span.end};
            return n;
        }
        if (!at_node_start()) {
            throw PlanError(PlanError::Kind::arity, {head.span.begin, peek().span.end},
                            head.text + " expects " + std::to_string(arity) + " child operator" +
                                (arity == 1 ? "" : "s") + ", found " + std::to_string(index),
                            "child operator");
        }
        return node(depth + 1);
    }

    void reject_extra_child(const Token& head, std::size_t arity) {
        if (at_node_start()) {
            throw PlanError(PlanError::Kind::arity, {head.span.begin, peek().span.end},
                            head.text + " expects " + std::to_string(arity) + " child operator" +
                                (arity == 1 ? "" : "s") + ", found more",
                            "operator arguments");
        }
    }

    std::string key(std::string_view what = "attribute key") {
        const auto& t = peek();
        if (t.kind != Tok::symbol || !is_attr_key(t.text)) {
            syntax_error(t.span, "expected " + std::string(what) + ", found " + describe(t), std::string(what));
        }
        return advance().text;
    }

    std::vector<std::string> key_list() {
        expect(Tok::lbracket, "'['");
        std::vector<std::string> keys{key()};
        while (peek().kind == Tok::comma) {
            advance();
            keys.push_back(key());
        }
        expect(Tok::rbracket, "']'");
        return keys;
    }

    OperatorNode node(std::size_t depth) {
        check_depth(depth);
        std::size_t start = expect(Tok::lparen, "'('").span.begin;
        const Token head = peek();
        if (head.kind != Tok::symbol) {
            syntax_error(head.span, "expected operator name, found " + describe(head), "operator name");
        }
        auto op = parse_op_name(head.text);
        if (!op) {
            if (is_upper_symbol(head)) {
                throw PlanError(PlanError::Kind::unknown_operator, head.span, "unknown operator " + head.text,
                                "operator name");
            }
            syntax_error(head.span, "expected operator name, found " + describe(head), "operator name");
        }
        advance();

        OperatorNode n;
        n.op = *op;
        if (peek().kind == Tok::hash) {
            advance();
            n.sub_question = expect(Tok::string, "annotation string").text;
        }

        std::size_t arity = op_arity(*op);
        if (*op == Op::retrieve) {
            if (at_node_start()) {
                throw PlanError(PlanError::Kind::arity, {head.span.begin, peek().span.end},
                                "RETRIEVE takes no child operators", "query string");
            }
            n.query = expect(Tok::string, "query string").text;
        } else {
            for (std::size_t i = 0; i < arity; ++i) {
                n.children.push_back(child(depth, head, i, arity));
            }
            reject_extra_child(head, arity);
            switch (*op) {
            case Op::extract: {
                auto keys = key_list();
                std::sort(keys.begin(), keys.end());
                keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
                n.keys = std::move(keys);
                break;
            }
            case Op::group_by: n.keys = key_list(); break;
            case Op::filter:
            case Op::join: n.predicate = expr(depth + 1, *op == Op::join); break;
            case Op::map: n.assignments = assignments(depth); break;
            case Op::apply: n.fn = apply_fn(); break;
            case Op::sum:
            case Op::avg:
            case Op::max:
            case Op::min:
            case Op::argmax:
            case Op::argmin: n.key = key(); break;
            default: break;
            }
        }
        n.span = {start, expect(Tok::rparen, "')'").span.end};
        return n;
    }

    std::vector<Assignment> assignments(std::size_t depth) {
        expect(Tok::lbracket, "'['");
        std::vector<Assignment> out;
        while (peek().kind != Tok::rbracket) {
            Assignment a;
            a.key = key("assignment target key");
            expect(Tok::assign, "':='");
            a.expr = expr(depth + 1, false);
            out.push_back(std::move(a));
            if (peek().kind != Tok::comma) {
                break;
            }
            advance();
            if (peek().kind == Tok::rbracket) {
                syntax_error(peek().span, "expected assignment after ','", "assignment target key");
            }
        }
        expect(Tok::rbracket, "']'");
        return out;
    }

    ApplyFn apply_fn() {
        if (peek().kind == Tok::symbol && peek().text == "len") {
            advance();
            return ApplyFn{ApplyFn::Kind::len, {}};
        }
        if (peek().kind == Tok::lparen && peek(1).kind == Tok::symbol && peek(1).text == "distinct") {
            advance();
            advance();
            ApplyFn fn{ApplyFn::Kind::distinct, key()};
            expect(Tok::rparen, "')'");
            return fn;
        }
        syntax_error(peek().span, "expected function name (len or (distinct key)), found " + describe(peek()),
                     "function name");
    }

    Expr expr(std::size_t depth, bool in_join) {
        check_depth(depth);
        const Token& t = peek();
        Expr e;
        switch (t.kind) {
        case Tok::lparen: {
            std::size_t start = advance().span.begin;
            const Token head = peek();
            if (head.kind != Tok::symbol || is_upper_symbol(head)) {
                syntax_error(head.span, "expected function name, found " + describe(head), "function name");
            }
            const FnInfo* fn = find_fn(head.text);
            if (!fn) {
                syntax_error(head.span, "unknown function " + head.text, "function name");
            }
            advance();
            std::vector<Expr> args;
            while (peek().kind != Tok::rparen && peek().kind != Tok::eof) {
                args.push_back(expr(depth + 1, in_join));
            }
            std::size_t end = expect(Tok::rparen, "')'").span.end;
            if (args.size() < fn->min_args || args.size() > fn->max_args) {
                throw PlanError(PlanError::Kind::arity, {start, end},
                                "function " + head.text + " called with " + std::to_string(args.size()) +
                                    " argument(s)",
                                "argument");
            }
            e = Expr::call(head.text, std::move(args));
            e.span = {start, end};
            return e;
        }
        case Tok::string: e = Expr::literal(Value(t.text)); break;
        case Tok::typed: {
            if (t.prefix == "d") {
                auto d = parse_date(t.text);
                if (!d) {
                    syntax_error(t.span, "invalid date literal", "YYYY-MM-DD");
                }
                e = Expr::literal(Value(*d));
            } else if (t.prefix == "dt") {
                auto d = parse_datetime(t.text);
                if (!d) {
                    syntax_error(t.span, "invalid datetime literal", "YYYY-MM-DDTHH:MM");
                }
                e = Expr::literal(Value(*d));
            } else {
                auto d = parse_duration(t.text);
                if (!d) {
                    syntax_error(t.span, "invalid duration literal", "e.g. 90m, 2h, 1d");
                }
                e = Expr::literal(Value(*d));
            }
            break;
        }
        case Tok::number: e = Expr::literal(number(t)); break;
        case Tok::symbol: e = symbol_expr(t); break;
        default: syntax_error(t.span, "expected expression, found " + describe(t), "expression");
        }
        e.span = t.span;
        advance();
        return e;
    }

    static Value number(const Token& t) {
        const char* first = t.text.data();
        const char* last = first + t.text.size();
        bool is_float = t.text.find_first_of(".eE") != std::string::npos;
        if (is_float) {
            double d = 0;
            auto r = std::from_chars(first, last, d);
            if (r.ec != std::errc{} || r.ptr != last) {
                syntax_error(t.span, "number out of range");
            }
            return Value(d);
        }
        std::int64_t i = 0;
        auto r = std::from_chars(first, last, i);
        if (r.ec != std::errc{} || r.ptr != last) {
            syntax_error(t.span, "integer out of range");
        }
        return Value(i);
    }

    static Expr symbol_expr(const Token& t) {
        const auto& s = t.text;
        if (s == "true") {
            return Expr::literal(Value(true));
        }
        if (s == "false") {
            return Expr::literal(Value(false));
        }
        if (s == "null") {
            return Expr::literal(Value());
        }
        if (s == "REF_DATE") {
            return Expr::ref_date();
        }
        if (s == "group") {
            return Expr::group_ref();
        }
        if (s.starts_with("left.") && is_attr_key(std::string_view(s).substr(5))) {
            return Expr::join_attr(JoinSide::left, s.substr(5));
        }
        if (s.starts_with("right.") && is_attr_key(std::string_view(s).substr(6))) {
            return Expr::join_attr(JoinSide::right, s.substr(6));
        }
        if (is_attr_key(s)) {
            return Expr::attr(s);
        }
        syntax_error(t.span, "expected expression, found " + describe(t), "expression");
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    ParseOptions options_;
};

} // namespace

OperatorTree parse_plan(std::string_view text, const ParseOptions& options) {
    return Parser(text, options).plan();
}

Expr parse_expr(std::string_view text) {
    return Parser(text, ParseOptions{}).standalone_expr();
}

// ---------------------------------------------------------------------------
// Serializer
// ---------------------------------------------------------------------------

namespace {

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out += c;
        }
    }
    out += '"';
    return out;
}

std::string literal_text(const Value& v) {
    switch (v.kind()) {
    case Value::Kind::Null: return "null";
    case Value::Kind::Bool: return v.as_bool() ? "true" : "false";
    case Value::Kind::Int: return std::to_string(v.as_int());
    case Value::Kind::Float: {
        char buf[64];
        auto r = std::to_chars(buf, buf + sizeof buf, v.as_float());
        std::string s(buf, r.ptr);
        if (s.find_first_of(".e") == std::string::npos) {
            s += ".0";
        }
        return s;
    }
    case Value::Kind::Str: return quote(v.as_str());
    case Value::Kind::Date: return "d" + quote(to_string(v.as_date()));
    case Value::Kind::DateTime: return "dt" + quote(to_string(v.as_datetime()));
    case Value::Kind::Duration: return "dur" + quote(to_string(v.as_duration()));
    case Value::Kind::List: {
        std::string out = "(list";
        for (const auto& e : v.as_list()) {
            out += " " + literal_text(e);
        }
        return out + ")";
    }
    }
    return "null";
}

std::string join_keys(const std::vector<std::string>& keys) {
    std::string out = "[";
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (i) {
            out += ", ";
        }
        out += keys[i];
    }
    return out + "]";
}

std::string node_args(const OperatorNode& n) {
    switch (n.op) {
    case Op::extract:
    case Op::group_by: return join_keys(n.keys);
    case Op::filter:
    case Op::join: return n.predicate ? serialize_expr(*n.predicate) : "true";
    case Op::map: {
        std::string out = "[";
        for (std::size_t i = 0; i < n.assignments.size(); ++i) {
            if (i) {
                out += ", ";
            }
            out += n.assignments[i].key + " := " + serialize_expr(n.assignments[i].expr);
        }
        return out + "]";
    }
    case Op::apply: return n.fn.kind == ApplyFn::Kind::len ? "len" : "(distinct " + n.fn.key + ")";
    case Op::sum:
    case Op::avg:
    case Op::max:
    case Op::min:
    case Op::argmax:
    case Op::argmin: return n.key;
    default: return {};
    }
}

void write_node(std::string& out, const OperatorNode& n, std::size_t indent) {
    if (n.op == Op::hole) {
        out += "?" + quote(n.sub_question.value_or(""));
        return;
    }
    out += "(";
    out += op_name(n.op);
    if (n.sub_question) {
        out += " #" + quote(*n.sub_question);
    }
    if (n.op == Op::retrieve) {
        out += " " + quote(n.query) + ")";
        return;
    }
    std::string pad(indent + 2, ' ');
    for (const auto& c : n.children) {
        out += "\n" + pad;
        write_node(out, c, indent + 2);
    }
    auto args = node_args(n);
    if (!args.empty()) {
        out += "\n" + pad + args;
    }
    out += ")";
}

} // namespace

std::string serialize_expr(const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::literal: return literal_text(e.value);
    case Expr::Kind::attr: return e.name;
    case Expr::Kind::join_attr: return (e.side == JoinSide::left ? "left." : "right.") + e.name;
    case Expr::Kind::group: return "group";
    case Expr::Kind::ref_date: return "REF_DATE";
    case Expr::Kind::call: {
        std::string out = "(" + e.name;
        for (const auto& a : e.args) {
            out += " " + serialize_expr(a);
        }
        return out + ")";
    }
    }
    return {};
}

std::string serialize_plan(const OperatorTree& tree) {
    std::string out;
    write_node(out, tree, 0);
    return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

enum class StaticType { unknown, boolean, numeric, temporal, duration, text, list, null };

StaticType static_type(const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::literal:
        switch (e.value.kind()) {
        case Value::Kind::Null: return StaticType::null;
        case Value::Kind::Bool: return StaticType::boolean;
        case Value::Kind::Int:
        case Value::Kind::Float: return StaticType::numeric;
        case Value::Kind::Str: return StaticType::text;
        case Value::Kind::Date:
        case Value::Kind::DateTime: return StaticType::temporal;
        case Value::Kind::Duration: return StaticType::duration;
        case Value::Kind::List: return StaticType::list;
        }
        return StaticType::unknown;
    case Expr::Kind::ref_date: return StaticType::temporal;
    case Expr::Kind::group: return StaticType::list;
    case Expr::Kind::call: {
        const auto& n = e.name;
        if (n == "year" || n == "len") {
            return StaticType::numeric;
        }
        if (n == "month" || n == "weekday") {
            return StaticType::text;
        }
        if (n == "date") {
            return StaticType::temporal;
        }
        if (n == "list") {
            return StaticType::list;
        }
        if (n == "+" || n == "-" || n == "*" || n == "/") {
            return StaticType::unknown;
        }
        return StaticType::boolean;
    }
    default: return StaticType::unknown;
    }
}

bool is_comparison(std::string_view n) {
    return n == "eq" || n == "ne" || n == "lt" || n == "le" || n == "gt" || n == "ge";
}

struct Validator {
    std::vector<Diagnostic> out;

    void report(Diagnostic::Severity sev, const std::string& id, std::string msg, SourceSpan span) {
        out.push_back(Diagnostic{sev, id, std::move(msg), span});
    }

    static bool produces_groups(const OperatorNode& n) {
        switch (n.op) {
        case Op::group_by: return true;
        case Op::filter:
        case Op::map:
        case Op::extract:
        case Op::argmax:
        case Op::argmin: return !n.children.empty() && produces_groups(n.children[0]);
        default: return false;
        }
    }

    static void provided_keys(const OperatorNode& n, std::set<std::string>& keys) {
        switch (n.op) {
        case Op::extract:
        case Op::group_by: keys.insert(n.keys.begin(), n.keys.end()); break;
        case Op::map:
            for (const auto& a : n.assignments) {
                keys.insert(a.key);
            }
            break;
        default: break;
        }
        if (n.op == Op::join) {
            std::set<std::string> left, right;
            provided_keys(n.children[0], left);
            provided_keys(n.children[1], right);
            for (const auto& k : left) {
                keys.insert(k);
                keys.insert("l." + k);
            }
            for (const auto& k : right) {
                keys.insert(k);
                keys.insert("r." + k);
            }
            return;
        }
        for (const auto& c : n.children) {
            provided_keys(c, keys);
        }
    }

    void check_expr(const Expr& e, const std::string& id, bool in_join, bool groups_available) {
        switch (e.kind) {
        case Expr::Kind::join_attr:
            if (!in_join) {
                report(Diagnostic::Severity::error, id,
                       std::string(e.side == JoinSide::left ? "left." : "right.") + " outside JOIN", e.span);
            }
            break;
        case Expr::Kind::group:
            if (!groups_available) {
                report(Diagnostic::Severity::error, id, "group referenced without an upstream GROUP_BY", e.span);
            }
            break;
        case Expr::Kind::call:
            if (is_comparison(e.name) && e.args.size() == 2) {
                auto a = static_type(e.args[0]);
                auto b = static_type(e.args[1]);
                if (a != StaticType::unknown && b != StaticType::unknown && a != StaticType::null &&
                    b != StaticType::null && a != b) {
                    report(Diagnostic::Severity::warning, id, "comparison between incompatible types in " + e.name,
                           e.span);
                }
            }
            for (const auto& arg : e.args) {
                check_expr(arg, id, in_join, groups_available);
            }
            break;
        default: break;
        }
    }

    void check_key(const OperatorNode& n, const std::string& key, const std::string& id) {
        std::set<std::string> keys;
        provided_keys(n.children[0], keys);
        if (!keys.contains(key)) {
            report(Diagnostic::Severity::warning, id, key + " not provably provided", n.span);
        }
    }

    void visit(const OperatorNode& n, const std::string& id) {
        if (n.op == Op::hole) {
            report(Diagnostic::Severity::error, id, "unresolved placeholder", n.span);
            return;
        }
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            const auto& c = n.children[i];
            if (is_scalar_op(c.op)) {
                report(Diagnostic::Severity::error, child_id(id, i),
                       std::string(op_name(c.op)) + " yields a scalar and cannot feed " + std::string(op_name(n.op)),
                       c.span);
            }
        }
        bool groups = !n.children.empty() && produces_groups(n.children[0]);
        switch (n.op) {
        case Op::filter:
        case Op::join:
            if (n.predicate) {
                check_expr(*n.predicate, id, n.op == Op::join, n.op == Op::filter && groups);
            }
            break;
        case Op::map:
            for (const auto& a : n.assignments) {
                check_expr(a.expr, id, false, groups);
            }
            break;
        case Op::sum:
        case Op::avg:
        case Op::max:
        case Op::min:
        case Op::argmax:
        case Op::argmin: check_key(n, n.key, id); break;
        case Op::apply:
            if (n.fn.kind == ApplyFn::Kind::distinct) {
                check_key(n, n.fn.key, id);
            }
            break;
        default: break;
        }
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            visit(n.children[i], child_id(id, i));
        }
    }
};

} // namespace

std::vector<Diagnostic> validate_plan(const OperatorTree& tree) {
    Validator v;
    v.visit(tree, "1");
    return std::move(v.out);
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
    return std::any_of(diagnostics.begin(), diagnostics.end(),
                       [](const Diagnostic& d) { return d.severity == Diagnostic::Severity::error; });
}

} // namespace optree
