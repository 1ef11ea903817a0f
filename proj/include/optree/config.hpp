#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "optree/engine.hpp"
#include "optree/evalkit.hpp"
#include "optree/json_io.hpp"
#include "optree/qud.hpp"
#include "optree/retrieve.hpp"

namespace optree {

/// Everything a deployment can tune. Built from defaults, then overridden
/// by a `key = value` file (see data/default.conf for every key).
struct AppConfig {
    std::filesystem::path stopwords;
    std::filesystem::path expansions;
    std::filesystem::path gazetteer;
    std::filesystem::path aliases;
    /// Event JSONL files; every persona found in them is served.
    std::vector<std::filesystem::path> stores;

    RetrievalConfig retrieval;
    EngineConfig engine;
    MetricsConfig metrics;

    std::vector<PlannerKind> planner_order = {PlannerKind::template_catalog, PlannerKind::llm};
    LlmClientConfig llm;
    std::size_t max_decomposition_depth = 8;

    std::string scorer = "coverage";      // coverage | remote
    std::string scorer_endpoint;
    std::string extractor = "gazetteer";  // gazetteer | remote
    std::string extractor_endpoint;

    std::string host = "127.0.0.1";
    int port = 8080;

    /// Throws ConfigError on any inconsistent value.
    void validate() const;
};

/// Defaults pointing at the bundled data directory.
AppConfig default_config();

/// Applies `key = value` lines over `base`. Relative paths are resolved
/// against `base_dir`. Unknown keys and malformed values throw ConfigError
/// naming the line.
AppConfig parse_config(std::string_view text, AppConfig base = default_config(),
                       const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);

/// Comma-separated source kinds; "all" selects every kind.
SourceSet parse_sources(std::string_view text);
std::vector<std::string> source_names(const SourceSet& sources);

/// Effective settings as served by GET /api/config.
Json to_json(const AppConfig& cfg);

} // namespace optree
