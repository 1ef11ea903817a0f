#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "optree/error.hpp"
#include "optree/value.hpp"

namespace optree {

enum class SourceKind : std::uint8_t {
    MusicStream,
    MovieStream,
    TvSeriesStream,
    Workout,
    Purchase,
    CalendarEntry,
    SocialMediaPost,
    Mail,
};

inline constexpr std::array<SourceKind, 8> all_source_kinds = {
    SourceKind::MusicStream, SourceKind::MovieStream,     SourceKind::TvSeriesStream, SourceKind::Workout,
    SourceKind::Purchase,    SourceKind::CalendarEntry,   SourceKind::SocialMediaPost, SourceKind::Mail,
};

/// Wire name, e.g. "CalendarEntry".
std::string_view source_name(SourceKind k);
std::optional<SourceKind> parse_source_kind(std::string_view name);
/// Lowercase words used in verbalizations, e.g. "calendar entry".
std::string_view source_label(SourceKind k);

/// Rank used to pick the canonical constituent of a duplicate group;
/// lower wins. Structured sources < calendar < mail < social media.
int dedup_priority(SourceKind k);

class SourceSet {
public:
    SourceSet() = default;
    static SourceSet all() {
        SourceSet s;
        s.bits_.set();
        return s;
    }
    void insert(SourceKind k) { bits_.set(static_cast<std::size_t>(k)); }
    bool contains(SourceKind k) const { return bits_.test(static_cast<std::size_t>(k)); }
    bool empty() const { return bits_.none(); }
    friend bool operator==(const SourceSet&, const SourceSet&) = default;

private:
    std::bitset<8> bits_;
};

struct TemporalScope {
    DateTime start;
    DateTime end;
    friend bool operator==(const TemporalScope&, const TemporalScope&) = default;
};

/// Closed-interval intersection; a point inside an interval overlaps it.
inline bool temporal_overlap(const TemporalScope& a, const TemporalScope& b) {
    return std::max(a.start, b.start) <= std::min(a.end, b.end);
}

using FieldMap = std::map<std::string, Value, std::less<>>;

struct Event {
    std::string id;
    std::string persona;
    SourceKind source = SourceKind::CalendarEntry;
    TemporalScope scope;
    FieldMap fields;
    std::optional<std::string> text;

    friend bool operator==(const Event&, const Event&) = default;
};

/// Thrown when an event violates the model invariants.
class InvalidEvent : public Error {
public:
    using Error::Error;
};

/// Checks the Event invariants; throws InvalidEvent.
void validate_event(const Event& e);

/// Field keys are non-empty lowercase snake_case.
bool is_field_key(std::string_view key);

/// Canonical text rendering used for indexing, matching and search:
/// `<source label> | key: value ... | text | <scope>`, all lowercase.
std::string verbalize(const Event& e);

/// Lowercased tokens split on whitespace and ASCII punctuation.
std::vector<std::string> tokenize(std::string_view text);

/// Index of an event inside its EventStore.
using EventRef = std::uint32_t;

/// Immutable, ordered collection of events (by scope.start, then id).
class EventStore {
public:
    EventStore() = default;
    /// Validates every event and the id uniqueness; throws InvalidEvent.
    explicit EventStore(std::vector<Event> events);

    std::span<const Event> events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    const Event& operator[](EventRef r) const { return events_[r]; }
    const std::string& verbalization(EventRef r) const { return verbalized_[r]; }

    std::optional<EventRef> find(std::string_view id) const;
    std::vector<std::string> personas() const;
    std::span<const EventRef> persona_events(std::string_view persona) const;

    /// Store holding only the given persona's events.
    EventStore subset(std::string_view persona) const;

private:
    std::vector<Event> events_;
    std::vector<std::string> verbalized_;
    std::unordered_map<std::string, EventRef> by_id_;
    std::map<std::string, std::vector<EventRef>, std::less<>> by_persona_;
};

} // namespace optree
