#include "optree/result.hpp"

namespace optree {

Value lookup(const ResultItem& item, std::string_view key, const EventStore& store) {
    if (auto it = item.attrs.find(key); it != item.attrs.end()) {
        return it->second;
    }
    if (item.events.size() == 1 && !item.is_group()) {
        const auto& fields = store[item.events.front()].fields;
        if (auto it = fields.find(key); it != fields.end()) {
            return it->second;
        }
    }
    return Value();
}

EventRef canonical_event(const ResultItem& item, const EventStore& store) {
    EventRef best = item.events.front();
    for (auto r : item.events) {
        if (dedup_priority(store[r].source) < dedup_priority(store[best].source)) {
            best = r;
        }
    }
    return best;
}

std::string summarize(const ResultItem& item, const EventStore& store) {
    if (item.is_group()) {
        std::string out;
        for (const auto& k : item.group_keys) {
            if (!out.empty()) {
                out += ", ";
            }
            auto it = item.attrs.find(k);
            out += it == item.attrs.end() ? "null" : render(it->second);
        }
        return out;
    }
    if (item.events.empty()) {
        return {};
    }
    const auto& e = store[canonical_event(item, store)];
    std::string out(source_label(e.source));
    out += " ";
    out += to_string(e.scope.start);
    if (auto it = e.fields.begin(); it != e.fields.end()) {
        out += " " + it->first + "=" + render(it->second);
    } else if (e.text) {
        out += " \"" + *e.text + "\"";
    }
    if (item.events.size() > 1) {
        out += " (+" + std::to_string(item.events.size() - 1) + ")";
    }
    return out;
}

} // namespace optree
