#include "optree/config.hpp"

#include <charconv>
#include <functional>
#include <map>

namespace optree {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    return std::string(s.substr(b, s.find_last_not_of(" \t\r") - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    while (true) {
        auto comma = s.find(',');
        auto item = trim(s.substr(0, comma));
        if (!item.empty()) {
            out.push_back(std::move(item));
        }
        if (comma == std::string_view::npos) {
            return out;
        }
        s.remove_prefix(comma + 1);
    }
}

template <typename T>
T parse_num(const std::string& v) {
    T out{};
    auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size()) {
        throw ConfigError("'" + v + "' is not a valid number");
    }
    return out;
}

bool parse_bool(const std::string& v) {
    auto l = ascii_lower(v);
    if (l == "true" || l == "yes" || l == "on" || l == "1") {
        return true;
    }
    if (l == "false" || l == "no" || l == "off" || l == "0") {
        return false;
    }
    throw ConfigError("'" + v + "' is not a boolean");
}

} // namespace

SourceSet parse_sources(std::string_view text) {
    SourceSet out;
    for (const auto& name : split_list(text)) {
        if (ascii_lower(name) == "all") {
            return SourceSet::all();
        }
        auto kind = parse_source_kind(name);
        if (!kind) {
            throw ConfigError("unknown source kind '" + name + "'");
        }
        out.insert(*kind);
    }
    return out;
}

std::vector<std::string> source_names(const SourceSet& sources) {
    std::vector<std::string> out;
    for (auto k : all_source_kinds) {
        if (sources.contains(k)) {
            out.emplace_back(source_name(k));
        }
    }
    return out;
}

void AppConfig::validate() const {
    retrieval.validate();
    engine.validate();
    metrics.validate();
    llm.validate();
    if (planner_order.empty()) {
        throw ConfigError("planner order must name at least one planner");
    }
    if (max_decomposition_depth == 0) {
        throw ConfigError("max decomposition depth must be positive");
    }
    if (scorer != "coverage" && scorer != "remote") {
        throw ConfigError("scorer must be 'coverage' or 'remote'");
    }
    if (scorer == "remote" && scorer_endpoint.empty()) {
        throw ConfigError("scorer = remote needs scorer.endpoint");
    }
    if (extractor != "gazetteer" && extractor != "remote") {
        throw ConfigError("extractor must be 'gazetteer' or 'remote'");
    }
    if (extractor == "remote" && extractor_endpoint.empty()) {
        throw ConfigError("extractor = remote needs extractor.endpoint");
    }
    if (port < 0 || port > 65535) {
        throw ConfigError("port must lie in [0, 65535]");
    }
}

AppConfig default_config() {
    const std::filesystem::path data = OPTREE_DATA_DIR;
    AppConfig cfg;
    cfg.stopwords = data / "stopwords.txt";
    cfg.expansions = data / "expansion.tsv";
    cfg.gazetteer = data / "gazetteer.tsv";
    cfg.aliases = data / "aliases.tsv";
    cfg.stores = {data / "fixture_f1.jsonl"};
    cfg.llm.icl_path = (data / "icl_examples.txt").string();
    return cfg;
}

AppConfig parse_config(std::string_view text, AppConfig cfg, const std::filesystem::path& base_dir) {
    auto path = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter, std::less<>> setters = {
        {"stopwords", [&](const std::string& v) { cfg.stopwords = path(v); }},
        {"expansions", [&](const std::string& v) { cfg.expansions = path(v); }},
        {"gazetteer", [&](const std::string& v) { cfg.gazetteer = path(v); }},
        {"aliases", [&](const std::string& v) { cfg.aliases = path(v); }},
        {"stores",
         [&](const std::string& v) {
             cfg.stores.clear();
             for (const auto& s : split_list(v)) {
                 cfg.stores.push_back(path(s));
             }
         }},
        {"retrieval.top_k", [&](const std::string& v) { cfg.retrieval.top_k = parse_num<std::size_t>(v); }},
        {"retrieval.tau", [&](const std::string& v) { cfg.retrieval.tau = parse_num<double>(v); }},
        {"retrieval.tau_lo", [&](const std::string& v) { cfg.retrieval.tau_lo = parse_num<double>(v); }},
        {"retrieval.tau_hi", [&](const std::string& v) { cfg.retrieval.tau_hi = parse_num<double>(v); }},
        {"retrieval.representatives",
         [&](const std::string& v) { cfg.retrieval.representatives = parse_num<std::size_t>(v); }},
        {"retrieval.dedup", [&](const std::string& v) { cfg.retrieval.dedup = parse_bool(v); }},
        {"bm25.k1", [&](const std::string& v) { cfg.retrieval.bm25.k1 = parse_num<double>(v); }},
        {"bm25.b", [&](const std::string& v) { cfg.retrieval.bm25.b = parse_num<double>(v); }},
        {"engine.reference_date",
         [&](const std::string& v) {
             auto d = parse_date(v);
             if (!d) {
                 throw ConfigError("'" + v + "' is not a YYYY-MM-DD date");
             }
             cfg.engine.reference_date = *d;
         }},
        {"engine.sources", [&](const std::string& v) { cfg.engine.sources = parse_sources(v); }},
        {"engine.preview_size", [&](const std::string& v) { cfg.engine.preview_size = parse_num<std::size_t>(v); }},
        {"metrics.rho", [&](const std::string& v) { cfg.metrics.rho = parse_num<double>(v); }},
        {"planner.order",
         [&](const std::string& v) {
             cfg.planner_order.clear();
             for (const auto& name : split_list(v)) {
                 auto k = parse_planner_name(name);
                 if (!k) {
                     throw ConfigError("unknown planner '" + name + "'");
                 }
                 cfg.planner_order.push_back(*k);
             }
         }},
        {"planner.max_depth", [&](const std::string& v) { cfg.max_decomposition_depth = parse_num<std::size_t>(v); }},
        {"llm.endpoint", [&](const std::string& v) { cfg.llm.endpoint = v; }},
        {"llm.model", [&](const std::string& v) { cfg.llm.model = v; }},
        {"llm.api_key_env", [&](const std::string& v) { cfg.llm.api_key_env = v; }},
        {"llm.max_retries", [&](const std::string& v) { cfg.llm.max_retries = parse_num<int>(v); }},
        {"llm.temperature", [&](const std::string& v) { cfg.llm.temperature = parse_num<double>(v); }},
        {"llm.icl_examples", [&](const std::string& v) { cfg.llm.icl_path = path(v).string(); }},
        {"scorer", [&](const std::string& v) { cfg.scorer = ascii_lower(v); }},
        {"scorer.endpoint", [&](const std::string& v) { cfg.scorer_endpoint = v; }},
        {"extractor", [&](const std::string& v) { cfg.extractor = ascii_lower(v); }},
        {"extractor.endpoint", [&](const std::string& v) { cfg.extractor_endpoint = v; }},
        {"service.host", [&](const std::string& v) { cfg.host = v; }},
        {"service.port", [&](const std::string& v) { cfg.port = parse_num<int>(v); }},
    };

    std::size_t line_no = 0;
    for (std::size_t pos = 0; pos < text.size();) {
        auto nl = std::min(text.find('\n', pos), text.size());
        ++line_no;
        const auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        try {
            it->second(value);
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + " (" + key + "): " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, default_config(), path.parent_path());
}

Json to_json(const AppConfig& cfg) {
    Json order = Json::array();
    for (auto k : cfg.planner_order) {
        order.push_back(planner_name(k));
    }
    return Json{
        {"retrieval",
         {{"top_k", cfg.retrieval.top_k},
          {"tau", cfg.retrieval.tau},
          {"tau_lo", cfg.retrieval.tau_lo},
          {"tau_hi", cfg.retrieval.tau_hi},
          {"representatives", cfg.retrieval.representatives},
          {"dedup", cfg.retrieval.dedup},
          {"bm25", {{"k1", cfg.retrieval.bm25.k1}, {"b", cfg.retrieval.bm25.b}}}}},
        {"engine",
         {{"reference_date", to_string(cfg.engine.reference_date)},
          {"sources", source_names(cfg.engine.sources)},
          {"preview_size", cfg.engine.preview_size}}},
        {"planner", {{"order", std::move(order)}, {"max_depth", cfg.max_decomposition_depth}, {"llm_configured", !cfg.llm.endpoint.empty()}}},
        {"scorer", cfg.scorer},
        {"extractor", cfg.extractor},
        {"metrics", {{"rho", cfg.metrics.rho}}},
    };
}

} // namespace optree
