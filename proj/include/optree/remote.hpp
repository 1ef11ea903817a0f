#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "optree/extract.hpp"
#include "optree/json_io.hpp"
#include "optree/retrieve.hpp"

namespace optree {

/// Network failure, non-2xx status or a response that is not JSON.
class TransportError : public Error {
public:
    using Error::Error;
};

/// POSTs a JSON body and returns the parsed JSON response.
class JsonTransport {
public:
    virtual ~JsonTransport() = default;
    virtual Json post(const Json& body) const = 0;
};

/// http:// or https:// endpoint, e.g. "http://localhost:8000/v1/chat/completions".
class HttpJsonTransport : public JsonTransport {
public:
    HttpJsonTransport(std::string url, std::map<std::string, std::string> headers = {},
                      std::chrono::seconds timeout = std::chrono::seconds(60));
    Json post(const Json& body) const override;

    const std::string& url() const { return url_; }

private:
    std::string url_;
    std::string origin_;
    std::string path_;
    std::map<std::string, std::string> headers_;
    std::chrono::seconds timeout_;
};

/// In-process transport for tests and embedding.
class FunctionTransport : public JsonTransport {
public:
    explicit FunctionTransport(std::function<Json(const Json&)> fn) : fn_(std::move(fn)) {}
    Json post(const Json& body) const override { return fn_(body); }

private:
    std::function<Json(const Json&)> fn_;
};

/// Reads `Authorization: Bearer <key>` from the named environment variable;
/// empty map when the variable is unset or the name is empty.
std::map<std::string, std::string> bearer_headers(const std::string& api_key_env);

/// Scorer behind `{query, verbalization} -> {score}`.
class RemoteScorer : public Scorer {
public:
    explicit RemoteScorer(std::shared_ptr<const JsonTransport> transport) : transport_(std::move(transport)) {}
    std::string_view name() const override { return "remote"; }
    double score(std::string_view query, std::string_view verbalization) const override;

private:
    std::shared_ptr<const JsonTransport> transport_;
};

/// Extractor behind `{verbalization, text, key} -> {value}`.
class RemoteExtractor : public Extractor {
public:
    explicit RemoteExtractor(std::shared_ptr<const JsonTransport> transport) : transport_(std::move(transport)) {}
    std::string_view name() const override { return "remote"; }
    Value extract(const Event& event, std::string_view verbalization, std::string_view key) const override;

private:
    std::shared_ptr<const JsonTransport> transport_;
};

} // namespace optree
