#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optree/ingest.hpp"
#include "optree/json_io.hpp"

namespace optree {

class AlignmentError : public Error {
public:
    using Error::Error;
};

struct MetricsConfig {
    /// Relative tolerance for Rlx-Hit@1, measured against the gold value.
    double rho = 0.10;
    bool casefold = true;

    void validate() const; // 0 <= rho < 1, else ConfigError
};

struct NormalizedAnswer {
    enum class Kind { number, month, date, text };
    Kind kind = Kind::text;
    double number = 0;
    std::string text; // canonical text for month, date and text kinds

    friend bool operator==(const NormalizedAnswer&, const NormalizedAnswer&) = default;
};

/// Trims, casefolds and keeps the first element of a "; "-joined list, then
/// recognizes plain numbers, YYYY-MM and YYYY-MM-DD.
NormalizedAnswer normalize_answer(std::string_view display, const MetricsConfig& cfg = {});

int hit_at_1(std::string_view predicted, std::string_view gold, const MetricsConfig& cfg = {});
/// Numeric answers hit when |pred - gold| <= rho * |gold| (gold 0 needs an
/// exact 0); everything else falls back to hit_at_1.
int rlx_hit_at_1(std::string_view predicted, std::string_view gold, const MetricsConfig& cfg = {});

struct SystemOutput {
    std::string case_id;
    std::string predicted;
    /// Where the trace for this case can be found (file name, request id).
    std::string trace_ref;
    /// Planning or execution error, if the system produced no answer.
    std::optional<std::string> error;
};

struct EvalFailure {
    std::string case_id;
    std::string template_id;
    std::string question;
    std::string predicted;
    std::string gold;
    std::string trace_ref;
    std::optional<std::string> error;
};

struct TemplateScore {
    std::size_t n = 0;
    std::size_t hits = 0;
    std::size_t rlx_hits = 0;
};

struct EvalReport {
    std::size_t n = 0;
    std::optional<double> hit_at_1;     // null when n == 0
    std::optional<double> rlx_hit_at_1; // null when n == 0
    std::map<std::string, TemplateScore> per_template;
    std::vector<EvalFailure> failures; // cases that miss Hit@1
};

/// Outputs must follow the case order with matching ids; throws AlignmentError.
EvalReport evaluate_run(const std::vector<GoldCase>& cases, const std::vector<SystemOutput>& outputs,
                        const MetricsConfig& cfg = {});

Json to_json(const EvalReport& report);

} // namespace optree
