#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace optree {

/// Calendar day, counted from 1970-01-01.
struct Date {
    std::int32_t days = 0;
    auto operator<=>(const Date&) const = default;
};

/// Naive local timestamp with minute precision, counted from 1970-01-01T00:00.
struct DateTime {
    std::int64_t minutes = 0;
    auto operator<=>(const DateTime&) const = default;
};

struct Duration {
    std::int64_t minutes = 0;
    auto operator<=>(const Duration&) const = default;
};

struct CivilDate {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;
};

Date make_date(int year, unsigned month, unsigned day);
CivilDate civil(Date d);
DateTime make_datetime(Date d, int hour, int minute);
inline DateTime to_datetime(Date d) { return DateTime{std::int64_t{d.days} * 1440}; }
Date date_of(DateTime t);
int minute_of_day(DateTime t);

// Strict ISO parsers; nullopt on any deviation from the format.
std::optional<Date> parse_date(std::string_view text);           // YYYY-MM-DD
std::optional<DateTime> parse_datetime(std::string_view text);   // YYYY-MM-DDTHH:MM
std::optional<Duration> parse_duration(std::string_view text);   // 90m, 2h, 1h30m, 1d

std::string to_string(Date d);
std::string to_string(DateTime t);
std::string to_string(Duration d);
std::string month_key(Date d);    // YYYY-MM
std::string weekday_name(Date d); // lowercase english name

/// Tagged scalar or list used for event fields, derived attributes and
/// expression results.
class Value {
public:
    enum class Kind { Null, Bool, Int, Float, Str, Date, DateTime, Duration, List };
    using List = std::vector<Value>;

    Value() = default;
    Value(std::nullptr_t) {}
    Value(bool b) : data_(b) {}
    Value(int i) : data_(std::int64_t{i}) {}
    Value(std::int64_t i) : data_(i) {}
    Value(double f) : data_(f) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(const char* s) : data_(std::string(s)) {}
    Value(Date d) : data_(d) {}
    Value(DateTime t) : data_(t) {}
    Value(Duration d) : data_(d) {}
    Value(List l) : data_(std::move(l)) {}

    Kind kind() const noexcept { return static_cast<Kind>(data_.index()); }
    bool is_null() const noexcept { return kind() == Kind::Null; }
    bool is_numeric() const noexcept { return kind() == Kind::Int || kind() == Kind::Float; }
    bool is_temporal() const noexcept { return kind() == Kind::Date || kind() == Kind::DateTime; }

    bool as_bool() const { return std::get<bool>(data_); }
    std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
    double as_float() const { return std::get<double>(data_); }
    const std::string& as_str() const { return std::get<std::string>(data_); }
    Date as_date() const { return std::get<Date>(data_); }
    DateTime as_datetime() const { return std::get<DateTime>(data_); }
    Duration as_duration() const { return std::get<Duration>(data_); }
    const List& as_list() const { return std::get<List>(data_); }

    /// Int or Float widened to double.
    double to_double() const;
    /// Date coerced to midnight; DateTime unchanged.
    DateTime to_datetime() const;

    /// Exact structural equality: same tag and payload (strings case-sensitive).
    friend bool operator==(const Value&, const Value&) = default;

private:
    std::variant<std::monostate, bool, std::int64_t, double, std::string, Date, DateTime, Duration, List> data_;
};

std::string_view kind_name(Value::Kind k);

enum class Ordering { less, equal, greater, unknown };

/// Engine-wide comparison. Int/Float compare numerically, Date/DateTime
/// compare after midnight coercion, strings compare case-insensitively.
/// Null or cross-family operands yield Ordering::unknown.
Ordering compare(const Value& a, const Value& b);

/// True when both operands are non-null and belong to the same family.
bool comparable(const Value& a, const Value& b);

/// Grouping equality: compare() == equal, with Null equivalent to Null.
bool equivalent(const Value& a, const Value& b);

/// Hash consistent with equivalent().
std::size_t hash_value(const Value& v);

/// Display form: ISO dates, floats with at most four decimals.
std::string render(const Value& v);

std::string ascii_lower(std::string_view s);

} // namespace optree
