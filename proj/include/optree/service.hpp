#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "optree/config.hpp"
#include "optree/json_io.hpp"
#include "optree/pipeline.hpp"

namespace optree {

/// Status plus JSON body; errors use {"error": {"type", "message", ...}}.
struct HttpReply {
    int status = 200;
    Json body;
};

/// Endpoint logic, independent of the HTTP server so it can be exercised
/// directly. Stores are immutable after construction; concurrent calls are
/// safe (LLM calls are serialized).
class Service {
public:
    Service(AppConfig cfg, std::map<std::string, std::unique_ptr<Pipeline>> pipelines,
            std::unique_ptr<ChatClient> llm = nullptr);

    /// POST /api/ask. Body: {question, persona, sources?, reference_date?,
    /// planner?: "template"|"llm"|"auto", plan?: DSL text that skips planning}.
    HttpReply ask(const Json& request) const;
    /// GET /api/personas
    HttpReply personas() const;
    /// GET /api/events?persona&query&page&page_size. Pages are 1-based.
    HttpReply events(const std::map<std::string, std::string>& params) const;
    /// GET /api/config
    HttpReply config() const;

    const AppConfig& settings() const { return cfg_; }

private:
    const Pipeline* find(const std::string& persona) const;

    AppConfig cfg_;
    std::map<std::string, std::unique_ptr<Pipeline>> pipelines_;
    std::unique_ptr<ChatClient> llm_;
    mutable std::mutex llm_mutex_;
};

/// Service from a config: loads resources and stores, and creates an HTTP
/// chat client when llm.endpoint is set.
std::unique_ptr<Service> make_service(const AppConfig& cfg);

/// The HTTP routes over a Service. Port 0 binds an ephemeral port.
class ApiServer {
public:
    explicit ApiServer(const Service& service);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Returns the bound port, or -1 when the address cannot be bound.
    int bind(const std::string& host, int port);
    /// Blocks until stop() is called from another thread.
    bool listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Blocks serving the endpoints until the process is stopped. Returns false
/// when the address cannot be bound.
bool serve(const Service& service, const std::string& host, int port);

} // namespace optree
