#include "optree/event.hpp"

#include <cctype>
#include <algorithm>

namespace optree {

namespace {

constexpr std::array<std::string_view, 8> wire_names = {
    "MusicStream", "MovieStream", "TvSeriesStream", "Workout", "Purchase", "CalendarEntry", "SocialMediaPost", "Mail",
};

constexpr std::array<std::string_view, 8> labels = {
    "music stream", "movie stream", "tv series stream", "workout",
    "purchase",     "calendar entry", "social media post", "mail",
};

bool is_token_char(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

std::string render_scope(const TemporalScope& s) {
    auto fmt = [](DateTime t) {
        auto iso = to_string(t);
        iso[10] = ' ';
        return iso;
    };
    if (s.start == s.end) {
        return fmt(s.start);
    }
    return fmt(s.start) + " - " + fmt(s.end);
}

} // namespace

std::string_view source_name(SourceKind k) {
    return wire_names[static_cast<std::size_t>(k)];
}

std::optional<SourceKind> parse_source_kind(std::string_view name) {
    for (std::size_t i = 0; i < wire_names.size(); ++i) {
        if (wire_names[i] == name) {
            return static_cast<SourceKind>(i);
        }
    }
    return std::nullopt;
}

std::string_view source_label(SourceKind k) {
    return labels[static_cast<std::size_t>(k)];
}

int dedup_priority(SourceKind k) {
    switch (k) {
    case SourceKind::CalendarEntry: return 1;
    case SourceKind::Mail: return 2;
    case SourceKind::SocialMediaPost: return 3;
    default: return 0;
    }
}

bool is_field_key(std::string_view key) {
    if (key.empty() || key.front() == '_' || (key.front() >= '0' && key.front() <= '9')) {
        return false;
    }
    return std::all_of(key.begin(), key.end(),
                       [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; });
}

void validate_event(const Event& e) {
    if (e.id.empty()) {
        throw InvalidEvent("event id must not be empty");
    }
    if (e.scope.start > e.scope.end) {
        throw InvalidEvent("event " + e.id + ": scope start after end");
    }
    for (const auto& [key, value] : e.fields) {
        if (!is_field_key(key)) {
            throw InvalidEvent("event " + e.id + ": field key '" + key + "' is not lowercase snake_case");
        }
    }
    bool has_text = e.text && !e.text->empty();
    if (e.fields.empty() && !has_text) {
        throw InvalidEvent("event " + e.id + ": needs fields or text");
    }
}

std::string verbalize(const Event& e) {
    std::string out(source_label(e.source));
    for (const auto& [key, value] : e.fields) {
        out += " | ";
        out += key;
        out += ": ";
        out += render(value);
    }
    if (e.text && !e.text->empty()) {
        out += " | ";
        out += *e.text;
    }
    out += " | ";
    out += render_scope(e.scope);
    return ascii_lower(out);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_token_char(c)) {
            current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

EventStore::EventStore(std::vector<Event> events) : events_(std::move(events)) {
    for (const auto& e : events_) {
        validate_event(e);
    }
    std::sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
        if (a.scope.start != b.scope.start) {
            return a.scope.start < b.scope.start;
        }
        return a.id < b.id;
    });
    verbalized_.reserve(events_.size());
    for (EventRef i = 0; i < events_.size(); ++i) {
        const auto& e = events_[i];
        if (!by_id_.emplace(e.id, i).second) {
            throw InvalidEvent("duplicate event id " + e.id);
        }
        by_persona_[e.persona].push_back(i);
        verbalized_.push_back(verbalize(e));
    }
}

std::optional<EventRef> EventStore::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::string> EventStore::personas() const {
    std::vector<std::string> out;
    for (const auto& [name, refs] : by_persona_) {
        out.push_back(name);
    }
    return out;
}

std::span<const EventRef> EventStore::persona_events(std::string_view persona) const {
    auto it = by_persona_.find(persona);
    if (it == by_persona_.end()) {
        return {};
    }
    return it->second;
}

EventStore EventStore::subset(std::string_view persona) const {
    std::vector<Event> picked;
    for (auto r : persona_events(persona)) {
        picked.push_back(events_[r]);
    }
    return EventStore(std::move(picked));
}

} // namespace optree
