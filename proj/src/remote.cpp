#include <httplib.h>

#include "optree/remote.hpp"

#include <cstdlib>

namespace optree {

HttpJsonTransport::HttpJsonTransport(std::string url, std::map<std::string, std::string> headers,
                                     std::chrono::seconds timeout)
    : url_(std::move(url)), headers_(std::move(headers)), timeout_(timeout) {
    auto scheme = url_.find("://");
    if (scheme == std::string::npos || (url_.compare(0, scheme, "http") != 0 && url_.compare(0, scheme, "https") != 0)) {
        throw ConfigError("endpoint must be an http:// or https:// URL: '" + url_ + "'");
    }
    auto slash = url_.find('/', scheme + 3);
    origin_ = url_.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url_.substr(slash);
    if (origin_.size() == scheme + 3) {
        throw ConfigError("endpoint has no host: '" + url_ + "'");
    }
}

Json HttpJsonTransport::post(const Json& body) const {
    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers(headers_.begin(), headers_.end());
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError("POST " + url_ + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("POST " + url_ + " returned HTTP " + std::to_string(res->status));
    }
    try {
        return Json::parse(res->body);
    } catch (const Json::parse_error&) {
        throw TransportError("POST " + url_ + " returned a body that is not JSON");
    }
}

std::map<std::string, std::string> bearer_headers(const std::string& api_key_env) {
    if (api_key_env.empty()) {
        return {};
    }
    const char* key = std::getenv(api_key_env.c_str());
    if (!key || !*key) {
        return {};
    }
    return {{"Authorization", std::string("Bearer ") + key}};
}

double RemoteScorer::score(std::string_view query, std::string_view verbalization) const {
    Json response;
    try {
        response = transport_->post(Json{{"query", query}, {"verbalization", verbalization}});
    } catch (const TransportError& e) {
        throw ScorerUnavailable(e.what());
    }
    auto it = response.find("score");
    if (it == response.end() || !it->is_number()) {
        throw ScorerUnavailable("scorer response has no numeric 'score'");
    }
    const double s = it->get<double>();
    if (!(s >= 0.0 && s <= 1.0)) {
        throw ScorerUnavailable("scorer returned " + std::to_string(s) + ", outside [0, 1]");
    }
    return s;
}

Value RemoteExtractor::extract(const Event& event, std::string_view verbalization, std::string_view key) const {
    Json response;
    try {
        response = transport_->post(
            Json{{"verbalization", verbalization}, {"text", event.text.value_or("")}, {"key", key}});
    } catch (const TransportError& e) {
        throw ExtractorUnavailable(e.what());
    }
    if (!response.is_object() || !response.contains("value")) {
        throw ExtractorUnavailable("extractor response has no 'value'");
    }
    try {
        return field_value_from_json(response["value"]);
    } catch (const Error& e) {
        throw ExtractorUnavailable(std::string("extractor value: ") + e.what());
    }
}

} // namespace optree
