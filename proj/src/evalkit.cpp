#include "optree/evalkit.hpp"

#include <charconv>
#include <cmath>

namespace optree {

void MetricsConfig::validate() const {
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw ConfigError("relaxed tolerance must satisfy 0 <= rho < 1");
    }
}

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::optional<double> parse_number(std::string_view s) {
    if (s.empty()) {
        return std::nullopt;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

bool is_month(std::string_view s) {
    return s.size() == 7 && parse_date(std::string(s) + "-01").has_value();
}

} // namespace

NormalizedAnswer normalize_answer(std::string_view display, const MetricsConfig& cfg) {
    auto s = trim(display);
    if (auto sep = s.find(';'); sep != std::string_view::npos) {
        s = trim(s.substr(0, sep));
    }
    NormalizedAnswer out;
    if (auto n = parse_number(s)) {
        out.kind = NormalizedAnswer::Kind::number;
        out.number = *n == 0.0 ? 0.0 : *n; // fold -0
        return out;
    }
    if (is_month(s)) {
        out.kind = NormalizedAnswer::Kind::month;
        out.text = std::string(s);
        return out;
    }
    if (parse_date(s)) {
        out.kind = NormalizedAnswer::Kind::date;
        out.text = std::string(s);
        return out;
    }
    out.text = cfg.casefold ? ascii_lower(s) : std::string(s);
    return out;
}

int hit_at_1(std::string_view predicted, std::string_view gold, const MetricsConfig& cfg) {
    return normalize_answer(predicted, cfg) == normalize_answer(gold, cfg) ? 1 : 0;
}

int rlx_hit_at_1(std::string_view predicted, std::string_view gold, const MetricsConfig& cfg) {
    const auto p = normalize_answer(predicted, cfg);
    const auto g = normalize_answer(gold, cfg);
    if (p.kind == NormalizedAnswer::Kind::number && g.kind == NormalizedAnswer::Kind::number) {
        if (g.number == 0.0) {
            return p.number == 0.0 ? 1 : 0;
        }
        // A hair of slack so that boundary cases like (90, 100) survive
        // binary rounding of rho * |gold|.
        const double allowed = cfg.rho * std::fabs(g.number);
        return std::fabs(p.number - g.number) <= allowed * (1 + 1e-12) ? 1 : 0;
    }
    return p == g ? 1 : 0;
}

EvalReport evaluate_run(const std::vector<GoldCase>& cases, const std::vector<SystemOutput>& outputs,
                        const MetricsConfig& cfg) {
    cfg.validate();
    if (cases.size() != outputs.size()) {
        throw AlignmentError(std::to_string(cases.size()) + " cases but " + std::to_string(outputs.size()) +
                             " outputs");
    }
    EvalReport report;
    report.n = cases.size();
    std::size_t hits = 0;
    std::size_t rlx = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        const auto& o = outputs[i];
        if (c.id != o.case_id) {
            throw AlignmentError("output " + std::to_string(i) + " is for case '" + o.case_id + "', expected '" +
                                 c.id + "'");
        }
        const auto gold = gold_display(c.answer);
        const int h = o.error ? 0 : hit_at_1(o.predicted, gold, cfg);
        const int r = o.error ? 0 : rlx_hit_at_1(o.predicted, gold, cfg);
        hits += static_cast<std::size_t>(h);
        rlx += static_cast<std::size_t>(r);
        auto& t = report.per_template[c.template_id.empty() ? "(none)" : c.template_id];
        ++t.n;
        t.hits += static_cast<std::size_t>(h);
        t.rlx_hits += static_cast<std::size_t>(r);
        if (!h) {
            report.failures.push_back({c.id, c.template_id, c.question, o.predicted, gold, o.trace_ref, o.error});
        }
    }
    if (report.n > 0) {
        report.hit_at_1 = static_cast<double>(hits) / static_cast<double>(report.n);
        report.rlx_hit_at_1 = static_cast<double>(rlx) / static_cast<double>(report.n);
    }
    return report;
}

Json to_json(const EvalReport& report) {
    auto metric = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    Json per_template = Json::object();
    for (const auto& [id, t] : report.per_template) {
        per_template[id] = Json{{"n", t.n},
                                {"hit_at_1", static_cast<double>(t.hits) / static_cast<double>(t.n)},
                                {"rlx_hit_at_1", static_cast<double>(t.rlx_hits) / static_cast<double>(t.n)}};
    }
    Json failures = Json::array();
    for (const auto& f : report.failures) {
        Json j{{"case_id", f.case_id},   {"template", f.template_id}, {"question", f.question},
               {"predicted", f.predicted}, {"gold", f.gold},          {"trace_ref", f.trace_ref}};
        if (f.error) {
            j["error"] = *f.error;
        }
        failures.push_back(std::move(j));
    }
    return Json{{"n", report.n},
                {"hit_at_1", metric(report.hit_at_1)},
                {"rlx_hit_at_1", metric(report.rlx_hit_at_1)},
                {"per_template", std::move(per_template)},
                {"failures", std::move(failures)}};
}

} // namespace optree
