#include "optree/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace optree {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json to_json(const Value& v) {
    switch (v.kind()) {
    case Value::Kind::Null: return nullptr;
    case Value::Kind::Bool: return v.as_bool();
    case Value::Kind::Int: return v.as_int();
    case Value::Kind::Float: return v.as_float();
    case Value::Kind::Str: return v.as_str();
    case Value::Kind::Date:
    case Value::Kind::DateTime:
    case Value::Kind::Duration: return render(v);
    case Value::Kind::List: {
        Json arr = Json::array();
        for (const auto& e : v.as_list()) {
            arr.push_back(to_json(e));
        }
        return arr;
    }
    }
    return nullptr;
}

Value field_value_from_json(const Json& j) {
    switch (j.type()) {
    case Json::value_t::null: return Value();
    case Json::value_t::boolean: return Value(j.get<bool>());
    case Json::value_t::number_integer:
    case Json::value_t::number_unsigned: return Value(j.get<std::int64_t>());
    case Json::value_t::number_float: return Value(j.get<double>());
    case Json::value_t::string: return Value(j.get<std::string>());
    case Json::value_t::array: {
        Value::List list;
        for (const auto& e : j) {
            if (e.is_array() || e.is_object()) {
                throw Error("nested containers are not allowed in field values");
            }
            list.push_back(field_value_from_json(e));
        }
        return Value(std::move(list));
    }
    default: throw Error("unsupported field value type");
    }
}

Json to_json(const Event& e) {
    Json j;
    j["id"] = e.id;
    j["persona"] = e.persona;
    j["source"] = std::string(source_name(e.source));
    j["start"] = to_string(e.scope.start);
    j["end"] = to_string(e.scope.end);
    Json fields = Json::object();
    for (const auto& [k, v] : e.fields) {
        fields[k] = to_json(v);
    }
    j["fields"] = std::move(fields);
    if (e.text) {
        j["text"] = *e.text;
    }
    return j;
}

namespace {

std::string required_string(const Json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError(line, std::string("missing \"") + key + "\"");
    }
    if (!it->is_string()) {
        throw ParseError(line, std::string("\"") + key + "\" must be a string");
    }
    return it->get<std::string>();
}

DateTime required_time(const Json& j, const char* key, std::size_t line) {
    auto text = required_string(j, key, line);
    auto t = parse_datetime(text);
    if (!t) {
        throw ParseError(line, std::string("\"") + key + "\" is not YYYY-MM-DDTHH:MM: " + text);
    }
    return *t;
}

} // namespace

Event event_from_json(const Json& j, std::size_t line, std::string fallback_id) {
    if (!j.is_object()) {
        throw ParseError(line, "record is not an object");
    }
    Event e;
    if (auto it = j.find("id"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) {
            throw ParseError(line, "\"id\" must be a string");
        }
        e.id = it->get<std::string>();
    } else {
        e.id = std::move(fallback_id);
    }
    e.persona = required_string(j, "persona", line);
    auto source = required_string(j, "source", line);
    auto kind = parse_source_kind(source);
    if (!kind) {
        throw ParseError(line, "unknown source kind '" + source + "'");
    }
    e.source = *kind;
    e.scope.start = required_time(j, "start", line);
    e.scope.end = required_time(j, "end", line);
    if (auto it = j.find("fields"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) {
            throw ParseError(line, "\"fields\" must be an object");
        }
        for (const auto& [k, v] : it->items()) {
            try {
                e.fields.emplace(k, field_value_from_json(v));
            } catch (const ParseError&) {
                throw;
            } catch (const Error& err) {
                throw ParseError(line, "field '" + k + "': " + err.what());
            }
        }
    }
    if (auto it = j.find("text"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) {
            throw ParseError(line, "\"text\" must be a string");
        }
        e.text = it->get<std::string>();
    }
    try {
        validate_event(e);
    } catch (const InvalidEvent& err) {
        throw ParseError(line, err.what());
    }
    return e;
}

EventStore parse_events(std::string_view text) {
    std::vector<Event> events;
    std::vector<std::size_t> lines;
    std::size_t line_no = 0;
    std::size_t record = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        ++record;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& err) {
            throw ParseError(line_no, std::string("malformed JSON: ") + err.what());
        }
        events.push_back(event_from_json(j, line_no, "r" + std::to_string(record)));
        lines.push_back(line_no);
    }
    std::set<std::string_view> ids;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (!ids.insert(events[i].id).second) {
            throw ParseError(lines[i], "duplicate event id '" + events[i].id + "'");
        }
    }
    return EventStore(std::move(events));
}

EventStore load_events(const std::filesystem::path& path) {
    return parse_events(read_text_file(path));
}

void write_events(std::ostream& out, std::span<const Event> events) {
    for (const auto& e : events) {
        out << to_json(e).dump() << '\n';
    }
}

Json to_json(const ResultItem& item, const EventStore& store) {
    Json j;
    Json ids = Json::array();
    for (auto r : item.events) {
        ids.push_back(store[r].id);
    }
    j["events"] = std::move(ids);
    Json attrs = Json::object();
    for (const auto& [k, v] : item.attrs) {
        attrs[k] = to_json(v);
    }
    j["attrs"] = std::move(attrs);
    if (item.is_group()) {
        j["group_keys"] = item.group_keys;
        j["members"] = item.members.size();
    }
    j["summary"] = summarize(item, store);
    return j;
}

Json to_json(const RetrievalDetail& detail, const EventStore& store) {
    Json j;
    j["kind"] = "retrieve";
    j["query"] = detail.query;
    j["expanded_terms"] = detail.expanded_terms;
    Json groups = Json::array();
    for (const auto& g : detail.groups) {
        groups.push_back(Json{{"signature", to_string(g.signature)},
                              {"decision", std::string(decision_name(g.decision))},
                              {"size", g.size}});
    }
    j["groups"] = std::move(groups);
    Json events = Json::array();
    for (const auto& e : detail.events) {
        Json row;
        row["event"] = store[e.ref].id;
        row["sparse_score"] = e.sparse_score;
        row["classifier_score"] = e.classifier_score ? Json(*e.classifier_score) : Json(nullptr);
        row["path"] = e.by_pattern ? "pattern" : "per-event";
        row["retained"] = e.retained;
        events.push_back(std::move(row));
    }
    j["events"] = std::move(events);
    return j;
}

Json to_json(const ExtractDetail& detail, const EventStore& store) {
    Json j;
    j["kind"] = "extract";
    j["keys"] = detail.keys;
    Json items = Json::array();
    for (const auto& item : detail.items) {
        Json values = Json::object();
        for (const auto& [k, v] : item.values) {
            values[k] = to_json(v);
        }
        items.push_back(Json{{"event", store[item.ref].id}, {"values", std::move(values)}});
    }
    j["items"] = std::move(items);
    j["counts"] = Json{{"scope", detail.from_scope},
                       {"fields", detail.from_fields},
                       {"extractor", detail.from_extractor},
                       {"missing", detail.missing}};
    Json failures = Json::array();
    for (const auto& f : detail.failures) {
        failures.push_back(Json{{"event", store[f.ref].id}, {"key", f.key}, {"message", f.message}});
    }
    j["failures"] = std::move(failures);
    return j;
}

Json to_json(const TraceNode& node, const EventStore& store) {
    Json j;
    j["id"] = node.id;
    j["op"] = std::string(op_name(node.op));
    j["sub_question"] = node.sub_question ? Json(*node.sub_question) : Json(nullptr);
    j["n_in"] = node.n_in;
    j["n_out"] = node.n_out;
    Json preview = Json::array();
    for (const auto& item : node.preview) {
        preview.push_back(to_json(item, store));
    }
    j["preview"] = std::move(preview);
    j["result"] = node.result ? Json(*node.result) : Json(nullptr);
    j["detail"] = std::visit(
        [&](const auto& d) -> Json {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else {
                return to_json(d, store);
            }
        },
        node.detail);
    Json children = Json::array();
    for (const auto& c : node.children) {
        children.push_back(to_json(c, store));
    }
    j["children"] = std::move(children);
    if (node.error) {
        j["error"] = *node.error;
    }
    return j;
}

Json to_json(const Answer& answer, const EventStore& store) {
    Json j;
    j["kind"] = std::string(answer_kind_name(answer.kind));
    j["display"] = render_answer(answer, store);
    if (answer.kind == Answer::Kind::scalar) {
        j["value"] = to_json(answer.scalar);
    } else if (answer.kind == Answer::Kind::items) {
        Json items = Json::array();
        for (const auto& item : answer.items) {
            items.push_back(to_json(item, store));
        }
        j["items"] = std::move(items);
    }
    return j;
}

} // namespace optree
