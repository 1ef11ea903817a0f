#include "optree/value.hpp"

#include <cctype>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

namespace optree {

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int to_int(std::string_view s) {
    int v = 0;
    for (char c : s) {
        v = v * 10 + (c - '0');
    }
    return v;
}

enum class Family { null, boolean, numeric, temporal, duration, text, list };

Family family(const Value& v) {
    switch (v.kind()) {
    case Value::Kind::Null: return Family::null;
    case Value::Kind::Bool: return Family::boolean;
    case Value::Kind::Int:
    case Value::Kind::Float: return Family::numeric;
    case Value::Kind::Date:
    case Value::Kind::DateTime: return Family::temporal;
    case Value::Kind::Duration: return Family::duration;
    case Value::Kind::Str: return Family::text;
    case Value::Kind::List: return Family::list;
    }
    return Family::null;
}

template <typename T>
Ordering order_of(const T& a, const T& b) {
    if (a < b) {
        return Ordering::less;
    }
    if (b < a) {
        return Ordering::greater;
    }
    return Ordering::equal;
}

std::size_t mix(std::size_t seed, std::size_t h) {
    return seed ^ (h + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

} // namespace

Date make_date(int year, unsigned month, unsigned day) {
    using namespace std::chrono;
    sys_days sd{year_month_day{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}}};
    return Date{static_cast<std::int32_t>(sd.time_since_epoch().count())};
}

CivilDate civil(Date d) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{d.days}}};
    return CivilDate{int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

DateTime make_datetime(Date d, int hour, int minute) {
    return DateTime{std::int64_t{d.days} * 1440 + hour * 60 + minute};
}

Date date_of(DateTime t) {
    auto days = t.minutes >= 0 ? t.minutes / 1440 : (t.minutes - 1439) / 1440;
    return Date{static_cast<std::int32_t>(days)};
}

int minute_of_day(DateTime t) {
    return static_cast<int>(t.minutes - std::int64_t{date_of(t).days} * 1440);
}

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    auto y = text.substr(0, 4), m = text.substr(5, 2), d = text.substr(8, 2);
    if (!all_digits(y) || !all_digits(m) || !all_digits(d)) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{to_int(y)}, std::chrono::month(unsigned(to_int(m))),
                                    std::chrono::day(unsigned(to_int(d)))};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return make_date(to_int(y), unsigned(to_int(m)), unsigned(to_int(d)));
}

std::optional<DateTime> parse_datetime(std::string_view text) {
    if (text.size() != 16 || text[10] != 'T' || text[13] != ':') {
        return std::nullopt;
    }
    auto date = parse_date(text.substr(0, 10));
    auto hh = text.substr(11, 2), mm = text.substr(14, 2);
    if (!date || !all_digits(hh) || !all_digits(mm)) {
        return std::nullopt;
    }
    int h = to_int(hh), m = to_int(mm);
    if (h > 23 || m > 59) {
        return std::nullopt;
    }
    return make_datetime(*date, h, m);
}

std::optional<Duration> parse_duration(std::string_view text) {
    if (text.empty()) {
        return std::nullopt;
    }
    std::int64_t total = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t j = i;
        while (j < text.size() && text[j] >= '0' && text[j] <= '9') {
            ++j;
        }
        if (j == i || j == text.size() || j - i > 9) {
            return std::nullopt;
        }
        std::int64_t n = to_int(text.substr(i, j - i));
        switch (text[j]) {
        case 'd': total += n * 1440; break;
        case 'h': total += n * 60; break;
        case 'm': total += n; break;
        default: return std::nullopt;
        }
        i = j + 1;
    }
    return Duration{total};
}

std::string to_string(Date d) {
    auto c = civil(d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
}

std::string to_string(DateTime t) {
    int mod = minute_of_day(t);
    char buf[24];
    std::snprintf(buf, sizeof buf, "T%02d:%02d", mod / 60, mod % 60);
    return to_string(date_of(t)) + buf;
}

std::string to_string(Duration d) {
    return std::to_string(d.minutes) + "m";
}

std::string month_key(Date d) {
    return to_string(d).substr(0, 7);
}

std::string weekday_name(Date d) {
    static constexpr const char* names[] = {"sunday",   "monday", "tuesday", "wednesday",
                                            "thursday", "friday", "saturday"};
    std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{d.days}}};
    return names[wd.c_encoding()];
}

double Value::to_double() const {
    return kind() == Kind::Int ? static_cast<double>(as_int()) : as_float();
}

DateTime Value::to_datetime() const {
    return kind() == Kind::Date ? optree::to_datetime(as_date()) : as_datetime();
}

std::string_view kind_name(Value::Kind k) {
    switch (k) {
    case Value::Kind::Null: return "null";
    case Value::Kind::Bool: return "bool";
    case Value::Kind::Int: return "int";
    case Value::Kind::Float: return "float";
    case Value::Kind::Str: return "str";
    case Value::Kind::Date: return "date";
    case Value::Kind::DateTime: return "datetime";
    case Value::Kind::Duration: return "duration";
    case Value::Kind::List: return "list";
    }
    return "?";
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool comparable(const Value& a, const Value& b) {
    auto fa = family(a);
    return fa != Family::null && fa == family(b);
}

Ordering compare(const Value& a, const Value& b) {
    if (!comparable(a, b)) {
        return Ordering::unknown;
    }
    switch (family(a)) {
    case Family::boolean: return order_of(a.as_bool(), b.as_bool());
    case Family::numeric:
        if (a.kind() == Value::Kind::Int && b.kind() == Value::Kind::Int) {
            return order_of(a.as_int(), b.as_int());
        }
        return order_of(a.to_double(), b.to_double());
    case Family::temporal: return order_of(a.to_datetime(), b.to_datetime());
    case Family::duration: return order_of(a.as_duration(), b.as_duration());
    case Family::text: return order_of(ascii_lower(a.as_str()), ascii_lower(b.as_str()));
    case Family::list: {
        const auto& la = a.as_list();
        const auto& lb = b.as_list();
        for (std::size_t i = 0; i < std::min(la.size(), lb.size()); ++i) {
            auto o = compare(la[i], lb[i]);
            if (o != Ordering::equal) {
                return o;
            }
        }
        return order_of(la.size(), lb.size());
    }
    case Family::null: break;
    }
    return Ordering::unknown;
}

bool equivalent(const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) {
        return a.is_null() && b.is_null();
    }
    return compare(a, b) == Ordering::equal;
}

std::size_t hash_value(const Value& v) {
    switch (family(v)) {
    case Family::null: return 0x51;
    case Family::boolean: return mix(1, v.as_bool());
    case Family::numeric: {
        double d = v.to_double();
        if (v.kind() == Value::Kind::Int) {
            return mix(2, std::hash<std::int64_t>{}(v.as_int()));
        }
        if (std::trunc(d) == d && std::fabs(d) < 9.2e18) {
            return mix(2, std::hash<std::int64_t>{}(static_cast<std::int64_t>(d)));
        }
        return mix(2, std::hash<double>{}(d));
    }
    case Family::temporal: return mix(3, std::hash<std::int64_t>{}(v.to_datetime().minutes));
    case Family::duration: return mix(4, std::hash<std::int64_t>{}(v.as_duration().minutes));
    case Family::text: return mix(5, std::hash<std::string>{}(ascii_lower(v.as_str())));
    case Family::list: {
        std::size_t h = 6;
        for (const auto& e : v.as_list()) {
            h = mix(h, hash_value(e));
        }
        return h;
    }
    }
    return 0;
}

std::string render(const Value& v) {
    switch (v.kind()) {
    case Value::Kind::Null: return "null";
    case Value::Kind::Bool: return v.as_bool() ? "true" : "false";
    case Value::Kind::Int: return std::to_string(v.as_int());
    case Value::Kind::Float: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f", v.as_float());
        std::string s = buf;
        while (!s.empty() && s.back() == '0') {
            s.pop_back();
        }
        if (!s.empty() && s.back() == '.') {
            s.pop_back();
        }
        if (s == "-0") {
            s = "0";
        }
        return s;
    }
    case Value::Kind::Str: return v.as_str();
    case Value::Kind::Date: return to_string(v.as_date());
    case Value::Kind::DateTime: return to_string(v.as_datetime());
    case Value::Kind::Duration: return to_string(v.as_duration());
    case Value::Kind::List: {
        std::string out;
        for (const auto& e : v.as_list()) {
            if (!out.empty()) {
                out += ", ";
            }
            out += render(e);
        }
        return out;
    }
    }
    return {};
}

} // namespace optree
