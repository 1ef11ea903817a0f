#include "optree/extract.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace optree {

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t from = 0;
    while (true) {
        auto at = s.find(sep, from);
        parts.push_back(s.substr(from, at - from));
        if (at == std::string_view::npos) {
            return parts;
        }
        from = at + 1;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename Fn>
void data_lines(std::string_view text, Fn&& fn) {
    std::size_t no = 0;
    for (auto line : split(text, '\n')) {
        ++no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (trim(line).empty() || trim(line).front() == '#') {
            continue;
        }
        fn(no, line);
    }
}

} // namespace

Gazetteer Gazetteer::parse(std::string_view text) {
    Gazetteer g;
    data_lines(text, [&](std::size_t no, std::string_view line) {
        auto cols = split(line, '\t');
        if (cols.size() != 3 || trim(cols[0]).empty() || trim(cols[1]).empty()) {
            throw ParseError(no, "gazetteer line needs 'key<TAB>pattern<TAB>value'");
        }
        if (!is_field_key(trim(cols[0]))) {
            throw ParseError(no, "invalid key '" + std::string(cols[0]) + "'");
        }
        g.add(std::string(trim(cols[0])), std::string(trim(cols[1])), std::string(trim(cols[2])));
    });
    return g;
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) {
    return parse(slurp(path));
}

void Gazetteer::add(std::string key, std::string pattern, std::string value) {
    rules_[std::move(key)].push_back(Rule{ascii_lower(pattern), std::move(value)});
}

void Gazetteer::merge(const Gazetteer& other) {
    for (const auto& [key, rules] : other.rules_) {
        auto& mine = rules_[key];
        mine.insert(mine.end(), rules.begin(), rules.end());
    }
}

std::optional<std::string> Gazetteer::match(std::string_view key, std::string_view text) const {
    auto it = rules_.find(key);
    if (it == rules_.end()) {
        return std::nullopt;
    }
    auto lowered = ascii_lower(text);
    for (const auto& rule : it->second) {
        if (lowered.find(rule.pattern) != std::string::npos) {
            return rule.value;
        }
    }
    return std::nullopt;
}

std::string Gazetteer::text() const {
    std::string out;
    for (const auto& [key, rules] : rules_) {
        for (const auto& r : rules) {
            out += key + "\t" + r.pattern + "\t" + r.value + "\n";
        }
    }
    return out;
}

AliasTable AliasTable::parse(std::string_view text) {
    AliasTable t;
    data_lines(text, [&](std::size_t no, std::string_view line) {
        auto cols = split(line, '\t');
        if (cols.size() != 2 || !is_field_key(trim(cols[0]))) {
            throw ParseError(no, "alias line needs 'key<TAB>alias,alias'");
        }
        std::vector<std::string> aliases;
        for (auto a : split(cols[1], ',')) {
            a = trim(a);
            if (!is_field_key(a)) {
                throw ParseError(no, "invalid alias '" + std::string(a) + "'");
            }
            aliases.emplace_back(a);
        }
        t.add(std::string(trim(cols[0])), std::move(aliases));
    });
    return t;
}

AliasTable AliasTable::load(const std::filesystem::path& path) {
    return parse(slurp(path));
}

void AliasTable::add(std::string key, std::vector<std::string> aliases) {
    auto& list = aliases_[std::move(key)];
    list.insert(list.end(), std::make_move_iterator(aliases.begin()), std::make_move_iterator(aliases.end()));
}

std::span<const std::string> AliasTable::aliases(std::string_view key) const {
    auto it = aliases_.find(key);
    if (it == aliases_.end()) {
        return {};
    }
    return it->second;
}

Value GazetteerExtractor::extract(const Event&, std::string_view verbalization, std::string_view key) const {
    if (auto hit = gazetteer_.match(key, verbalization)) {
        return Value(*hit);
    }
    return Value();
}

namespace {

constexpr std::array<std::string_view, 6> derived_keys = {"date", "start_time", "end_time", "month", "year", "weekday"};

} // namespace

bool is_derived_key(std::string_view key) {
    return std::find(derived_keys.begin(), derived_keys.end(), key) != derived_keys.end();
}

Value derived_value(const Event& event, std::string_view key) {
    const auto day = date_of(event.scope.start);
    if (key == "date") {
        return Value(day);
    }
    if (key == "start_time") {
        return Value(event.scope.start);
    }
    if (key == "end_time") {
        return Value(event.scope.end);
    }
    if (key == "month") {
        return Value(month_key(day));
    }
    if (key == "year") {
        return Value(std::int64_t{civil(day).year});
    }
    if (key == "weekday") {
        return Value(weekday_name(day));
    }
    return Value();
}

Value extract_value(const ResultItem& item, std::string_view key, const EventStore& store, const AliasTable& aliases,
                    const Extractor& extractor, ExtractDetail* detail) {
    if (item.events.empty()) {
        return Value();
    }
    const EventRef canonical = canonical_event(item, store);
    const Event& head = store[canonical];

    if (is_derived_key(key)) {
        if (detail) {
            ++detail->from_scope;
        }
        return derived_value(head, key);
    }

    std::vector<EventRef> by_priority(item.events);
    std::stable_sort(by_priority.begin(), by_priority.end(), [&](EventRef a, EventRef b) {
        return dedup_priority(store[a].source) < dedup_priority(store[b].source);
    });
    for (auto r : by_priority) {
        const auto& fields = store[r].fields;
        if (auto it = fields.find(key); it != fields.end()) {
            if (detail) {
                ++detail->from_fields;
            }
            return it->second;
        }
        for (const auto& alias : aliases.aliases(key)) {
            if (auto it = fields.find(alias); it != fields.end()) {
                if (detail) {
                    ++detail->from_fields;
                }
                return it->second;
            }
        }
    }

    try {
        auto v = extractor.extract(head, store.verbalization(canonical), key);
        if (detail) {
            ++(v.is_null() ? detail->missing : detail->from_extractor);
        }
        return v;
    } catch (const ExtractorUnavailable& e) {
        if (detail) {
            ++detail->missing;
            detail->failures.push_back(ExtractFailure{canonical, std::string(key), e.what()});
        }
        return Value();
    }
}

void extract_attributes(std::vector<ResultItem>& items, std::span<const std::string> keys, const EventStore& store,
                        const AliasTable& aliases, const Extractor& extractor, ExtractDetail* detail) {
    if (detail) {
        detail->keys.assign(keys.begin(), keys.end());
    }
    for (auto& item : items) {
        ExtractedItem record;
        for (const auto& key : keys) {
            if (item.attrs.contains(key)) {
                continue;
            }
            auto v = extract_value(item, key, store, aliases, extractor, detail);
            if (detail) {
                record.values.emplace(key, v);
            }
            item.attrs.emplace(key, std::move(v));
        }
        if (detail && !item.events.empty()) {
            record.ref = canonical_event(item, store);
            detail->items.push_back(std::move(record));
        }
    }
}

} // namespace optree
