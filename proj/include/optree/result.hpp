#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "optree/event.hpp"
#include "optree/value.hpp"

namespace optree {

using AttrMap = std::map<std::string, Value, std::less<>>;

/// Intermediate row flowing between operators. One constituent event for a
/// plain retrieval hit, several after duplicate merging or JOIN. GROUP_BY
/// output carries its members and the grouping keys.
struct ResultItem {
    std::vector<EventRef> events;
    AttrMap attrs;
    std::vector<ResultItem> members;
    std::vector<std::string> group_keys;

    bool is_group() const noexcept { return !group_keys.empty(); }
    friend bool operator==(const ResultItem&, const ResultItem&) = default;
};

/// attrs first, then the raw fields of a single-event item, then Null.
Value lookup(const ResultItem& item, std::string_view key, const EventStore& store);

/// Constituent with the best dedup priority; ties go to the earlier position.
EventRef canonical_event(const ResultItem& item, const EventStore& store);

/// Short human-readable rendering used by previews and list answers.
std::string summarize(const ResultItem& item, const EventStore& store);

} // namespace optree
