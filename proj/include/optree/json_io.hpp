#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include <json.hpp>

#include "optree/engine.hpp"
#include "optree/event.hpp"

namespace optree {

using Json = nlohmann::ordered_json;

/// Values as JSON: numbers and strings natively; temporal values and
/// durations as their ISO / "90m" strings; lists as arrays.
Json to_json(const Value& v);
/// Field values from event records: bool, integer, float, string, array of those.
Value field_value_from_json(const Json& j);

Json to_json(const Event& e);
/// One JSONL record; `line` is used for error positions and `fallback_id`
/// when the record has no id. Throws ParseError.
Event event_from_json(const Json& j, std::size_t line, std::string fallback_id);

/// Reads the event JSONL format. Blank lines are skipped. Throws ParseError.
EventStore parse_events(std::string_view text);
EventStore load_events(const std::filesystem::path& path);
void write_events(std::ostream& out, std::span<const Event> events);

Json to_json(const ResultItem& item, const EventStore& store);
Json to_json(const RetrievalDetail& detail, const EventStore& store);
Json to_json(const ExtractDetail& detail, const EventStore& store);
/// Stable field names: id, op, sub_question, n_in, n_out, preview, result,
/// detail, children, plus error on the failing node of a partial trace.
Json to_json(const TraceNode& node, const EventStore& store);
Json to_json(const Answer& answer, const EventStore& store);

std::string read_text_file(const std::filesystem::path& path);

} // namespace optree
