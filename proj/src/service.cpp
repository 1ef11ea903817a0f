#include <httplib.h>

#include "optree/service.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>

namespace optree {

namespace {

HttpReply error_reply(int status, std::string type, const std::string& message) {
    return {status, Json{{"error", {{"type", std::move(type)}, {"message", message}}}}};
}

Json timings_json(double qud_millis, const std::vector<NodeTiming>& timings, double total_exec) {
    Json ops = Json::array();
    for (const auto& t : timings) {
        ops.push_back(Json{{"node_id", t.node_id}, {"ms", t.millis}});
    }
    return Json{{"qud_ms", qud_millis}, {"execute_ms", total_exec}, {"operators", std::move(ops)}};
}

std::optional<std::size_t> parse_count(const std::string& text) {
    std::size_t v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size()) {
        return std::nullopt;
    }
    return v;
}

constexpr std::size_t max_page_size = 500;

} // namespace

Service::Service(AppConfig cfg, std::map<std::string, std::unique_ptr<Pipeline>> pipelines,
                 std::unique_ptr<ChatClient> llm)
    : cfg_(std::move(cfg)), pipelines_(std::move(pipelines)), llm_(std::move(llm)) {}

const Pipeline* Service::find(const std::string& persona) const {
    auto it = pipelines_.find(persona);
    return it == pipelines_.end() ? nullptr : it->second.get();
}

HttpReply Service::ask(const Json& request) const {
    if (!request.is_object()) {
        return error_reply(400, "BadRequest", "request body must be a JSON object");
    }
    auto str = [&](const char* key) -> std::optional<std::string> {
        auto it = request.find(key);
        if (it == request.end() || it->is_null()) {
            return std::nullopt;
        }
        if (!it->is_string()) {
            throw std::invalid_argument(std::string("'") + key + "' must be a string");
        }
        return it->get<std::string>();
    };

    std::string question;
    std::string persona;
    EngineConfig engine_cfg = cfg_.engine;
    PlannerConfig planner;
    planner.order = cfg_.planner_order;
    planner.llm.max_retries = cfg_.llm.max_retries;
    planner.llm.max_depth = cfg_.max_decomposition_depth;
    std::optional<std::string> plan_text;
    try {
        question = str("question").value_or("");
        persona = str("persona").value_or("");
        plan_text = str("plan");
        if (auto d = str("reference_date")) {
            auto date = parse_date(*d);
            if (!date) {
                throw std::invalid_argument("'reference_date' must be YYYY-MM-DD");
            }
            engine_cfg.reference_date = *date;
        }
        if (auto it = request.find("sources"); it != request.end() && !it->is_null()) {
            if (!it->is_array() || it->empty()) {
                throw std::invalid_argument("'sources' must be a non-empty array of source kinds");
            }
            SourceSet sources;
            for (const auto& s : *it) {
                auto kind = s.is_string() ? parse_source_kind(s.get<std::string>()) : std::nullopt;
                if (!kind) {
                    throw std::invalid_argument("unknown source kind " + s.dump());
                }
                sources.insert(*kind);
            }
            engine_cfg.sources = sources;
        }
        if (auto p = str("planner")) {
            if (*p == "template") {
                planner.order = {PlannerKind::template_catalog};
            } else if (*p == "llm") {
                planner.order = {PlannerKind::llm};
            } else if (*p != "auto") {
                throw std::invalid_argument("'planner' must be template, llm or auto");
            }
        }
    } catch (const std::invalid_argument& e) {
        return error_reply(400, "BadRequest", e.what());
    }
    if (question.find_first_not_of(" \t\r\n") == std::string::npos && !plan_text) {
        return error_reply(400, "BadRequest", "'question' must be a non-empty string");
    }
    if (persona.empty()) {
        return error_reply(400, "BadRequest", "'persona' is required");
    }
    const Pipeline* pipeline = find(persona);
    if (!pipeline) {
        return error_reply(404, "UnknownPersona", "no persona named '" + persona + "'");
    }
    const auto& store = pipeline->store();

    // Planning.
    OperatorTree tree;
    std::string planner_used = "plan";
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (plan_text) {
            tree = parse_plan(*plan_text);
        } else {
            std::unique_lock lock(llm_mutex_, std::defer_lock);
            if (llm_ && std::find(planner.order.begin(), planner.order.end(), PlannerKind::llm) != planner.order.end()) {
                lock.lock();
            }
            auto outcome = plan_question(question, planner, llm_.get());
            tree = std::move(outcome.tree);
            planner_used = std::string(planner_name(outcome.planner));
        }
    } catch (const PlanError& e) {
        auto reply = error_reply(400, "PlanError", e.what());
        reply.body["error"]["position"] = e.position();
        return reply;
    } catch (const PlanningFailed& e) {
        return error_reply(422, "PlanningFailed", e.what());
    }
    const double qud_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    Json body{{"question", question}, {"persona", persona}, {"planner", planner_used},
              {"reference_date", to_string(engine_cfg.reference_date)}, {"plan", serialize_plan(tree)}};
    const auto t1 = std::chrono::steady_clock::now();
    try {
        auto result = pipeline->execute(tree, engine_cfg);
        const double exec_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t1).count();
        body["answer"] = render_answer(result.answer, store);
        body["answer_kind"] = std::string(answer_kind_name(result.answer.kind));
        body["result"] = to_json(result.answer, store);
        body["trace"] = to_json(result.trace, store);
        body["timings"] = timings_json(qud_ms, result.timings, exec_ms);
        return {200, std::move(body)};
    } catch (const ExecError& e) {
        const double exec_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t1).count();
        body["error"] = Json{{"type", "ExecError"},
                             {"cause", std::string(cause_name(e.cause()))},
                             {"node_id", e.node_id()},
                             {"message", e.what()}};
        body["trace"] = e.partial_trace() ? to_json(*e.partial_trace(), store) : Json();
        body["timings"] = timings_json(qud_ms, {}, exec_ms);
        return {500, std::move(body)};
    }
}

HttpReply Service::personas() const {
    Json list = Json::array();
    for (const auto& [name, pipeline] : pipelines_) {
        const auto events = pipeline->store().events();
        Json counts = Json::object();
        for (auto k : all_source_kinds) {
            counts[std::string(source_name(k))] =
                std::count_if(events.begin(), events.end(), [k](const Event& e) { return e.source == k; });
        }
        Json entry{{"name", name}, {"event_count", events.size()}, {"counts", std::move(counts)}};
        if (!events.empty()) {
            DateTime last_end = events.front().scope.end;
            for (const auto& e : events) {
                last_end = std::max(last_end, e.scope.end);
            }
            entry["first"] = to_string(events.front().scope.start);
            entry["last"] = to_string(last_end);
        } else {
            entry["first"] = nullptr;
            entry["last"] = nullptr;
        }
        list.push_back(std::move(entry));
    }
    return {200, Json{{"personas", std::move(list)}}};
}

HttpReply Service::events(const std::map<std::string, std::string>& params) const {
    auto get = [&](const char* key) -> std::optional<std::string> {
        auto it = params.find(key);
        return it == params.end() ? std::nullopt : std::optional<std::string>(it->second);
    };
    const auto persona = get("persona");
    if (!persona || persona->empty()) {
        return error_reply(400, "BadRequest", "'persona' is required");
    }
    std::size_t page = 1;
    std::size_t page_size = 50;
    if (auto p = get("page")) {
        auto v = parse_count(*p);
        if (!v || *v == 0) {
            return error_reply(400, "BadRequest", "'page' must be a positive integer");
        }
        page = *v;
    }
    if (auto p = get("page_size")) {
        auto v = parse_count(*p);
        if (!v || *v == 0 || *v > max_page_size) {
            return error_reply(400, "BadRequest",
                               "'page_size' must be an integer in [1, " + std::to_string(max_page_size) + "]");
        }
        page_size = *v;
    }
    const Pipeline* pipeline = find(*persona);
    if (!pipeline) {
        return error_reply(404, "UnknownPersona", "no persona named '" + *persona + "'");
    }
    const auto& store = pipeline->store();
    const auto needle = ascii_lower(get("query").value_or(""));

    std::vector<EventRef> hits;
    for (EventRef r = 0; r < store.size(); ++r) {
        if (needle.empty() || store.verbalization(r).find(needle) != std::string::npos) {
            hits.push_back(r);
        }
    }
    std::stable_sort(hits.begin(), hits.end(), [&](EventRef a, EventRef b) {
        const auto& ea = store[a];
        const auto& eb = store[b];
        if (ea.scope.start != eb.scope.start) {
            return ea.scope.start > eb.scope.start;
        }
        return ea.id < eb.id;
    });

    Json page_events = Json::array();
    const std::size_t begin = std::min(hits.size(), (page - 1) * page_size);
    const std::size_t end = std::min(hits.size(), begin + page_size);
    for (std::size_t i = begin; i < end; ++i) {
        auto j = to_json(store[hits[i]]);
        j["verbalization"] = store.verbalization(hits[i]);
        page_events.push_back(std::move(j));
    }
    return {200, Json{{"persona", *persona},
                      {"query", get("query").value_or("")},
                      {"page", page},
                      {"page_size", page_size},
                      {"total", hits.size()},
                      {"events", std::move(page_events)}}};
}

HttpReply Service::config() const {
    auto j = to_json(cfg_);
    Json personas = Json::array();
    for (const auto& [name, _] : pipelines_) {
        personas.push_back(name);
    }
    j["personas"] = std::move(personas);
    return {200, std::move(j)};
}

std::unique_ptr<Service> make_service(const AppConfig& cfg) {
    cfg.validate();
    auto resources = Resources::load(cfg);
    auto pipelines = build_pipelines(cfg, resources);
    std::unique_ptr<ChatClient> llm;
    if (!cfg.llm.endpoint.empty()) {
        llm = std::make_unique<HttpChatClient>(cfg.llm);
    }
    return std::make_unique<Service>(cfg, std::move(pipelines), std::move(llm));
}

struct ApiServer::Impl {
    httplib::Server server;
};

ApiServer::ApiServer(const Service& service) : impl_(std::make_unique<Impl>()) {
    auto& server = impl_->server;
    auto send = [](httplib::Response& res, const HttpReply& reply) {
        res.status = reply.status;
        res.set_content(reply.body.dump(), "application/json");
    };
    server.Post("/api/ask", [&service, send](const httplib::Request& req, httplib::Response& res) {
        Json body;
        try {
            body = Json::parse(req.body);
        } catch (const Json::parse_error& e) {
            send(res, error_reply(400, "BadRequest", std::string("body is not JSON: ") + e.what()));
            return;
        }
        send(res, service.ask(body));
    });
    server.Get("/api/personas",
               [&service, send](const httplib::Request&, httplib::Response& res) { send(res, service.personas()); });
    server.Get("/api/events", [&service, send](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> params;
        for (const auto& [k, v] : req.params) {
            params.emplace(k, v);
        }
        send(res, service.events(params));
    });
    server.Get("/api/config",
               [&service, send](const httplib::Request&, httplib::Response& res) { send(res, service.config()); });
    server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send(res, error_reply(500, "InternalError", what));
    });
}

ApiServer::~ApiServer() = default;

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0) {
        return impl_->server.bind_to_any_port(host);
    }
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool ApiServer::listen() {
    return impl_->server.listen_after_bind();
}

void ApiServer::stop() {
    impl_->server.stop();
}

bool serve(const Service& service, const std::string& host, int port) {
    ApiServer server(service);
    return server.bind(host, port) >= 0 && server.listen();
}

} // namespace optree
