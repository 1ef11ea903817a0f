#include <CLI11.hpp>

#include "optree/cli.hpp"

#include <fstream>
#include <iostream>

#include "optree/config.hpp"
#include "optree/evalkit.hpp"
#include "optree/ingest.hpp"
#include "optree/pipeline.hpp"
#include "optree/service.hpp"

namespace optree {

namespace {

/// Errors caused by the invocation rather than by the program.
class UsageError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::string config_path;
    std::vector<std::string> stores;

    // ask / plan
    std::string question;
    std::string persona;
    std::string planner = "auto";
    std::string reference_date;
    std::string sources;
    bool show_trace = false;
    bool json = false;

    // generate
    std::string out_dir;
    std::uint64_t seed = 42;
    std::string persona_name = "alex";
    std::size_t n_questions = 200;

    // eval
    std::string cases_path;
    std::string report_path;

    // serve
    std::string host;
    int port = -1;

    // events
    std::string query;
    std::size_t page = 1;
    std::size_t page_size = 20;
};

AppConfig effective_config(const Options& o) {
    AppConfig cfg = o.config_path.empty() ? default_config() : load_config(o.config_path);
    if (!o.stores.empty()) {
        cfg.stores.assign(o.stores.begin(), o.stores.end());
    }
    if (!o.reference_date.empty()) {
        auto d = parse_date(o.reference_date);
        if (!d) {
            throw UsageError("--reference-date must be YYYY-MM-DD");
        }
        cfg.engine.reference_date = *d;
    }
    if (!o.sources.empty()) {
        cfg.engine.sources = parse_sources(o.sources);
    }
    if (o.planner == "template") {
        cfg.planner_order = {PlannerKind::template_catalog};
    } else if (o.planner == "llm") {
        cfg.planner_order = {PlannerKind::llm};
    }
    cfg.validate();
    return cfg;
}

PlannerConfig planner_config(const AppConfig& cfg) {
    PlannerConfig p;
    p.order = cfg.planner_order;
    p.llm.max_retries = cfg.llm.max_retries;
    p.llm.max_depth = cfg.max_decomposition_depth;
    if (!cfg.llm.icl_path.empty() && std::filesystem::exists(cfg.llm.icl_path)) {
        p.llm.icl_examples = read_text_file(cfg.llm.icl_path);
    }
    return p;
}

std::unique_ptr<ChatClient> chat_client(const AppConfig& cfg) {
    if (cfg.llm.endpoint.empty()) {
        return nullptr;
    }
    return std::make_unique<HttpChatClient>(cfg.llm);
}

const Pipeline& pick_persona(const std::map<std::string, std::unique_ptr<Pipeline>>& pipelines,
                             const std::string& persona) {
    if (persona.empty()) {
        if (pipelines.size() == 1) {
            return *pipelines.begin()->second;
        }
        throw UsageError("--persona is required when the stores hold several personas");
    }
    auto it = pipelines.find(persona);
    if (it == pipelines.end()) {
        std::string known;
        for (const auto& [name, _] : pipelines) {
            known += (known.empty() ? "" : ", ") + name;
        }
        throw UsageError("unknown persona '" + persona + "' (known: " + known + ")");
    }
    return *it->second;
}

void print_trace(std::ostream& out, const TraceNode& node, const EventStore& store, int depth = 0) {
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << node.id << ' ' << op_name(node.op);
    if (node.sub_question) {
        out << " \"" << *node.sub_question << '"';
    }
    out << "  out=" << node.n_out;
    if (node.result) {
        out << "  result=" << *node.result;
    }
    if (node.error) {
        out << "  ERROR " << *node.error;
    }
    out << '\n';
    for (const auto& c : node.children) {
        print_trace(out, c, store, depth + 1);
    }
}

int run_ask(const Options& o, std::ostream& out) {
    const auto cfg = effective_config(o);
    const auto resources = Resources::load(cfg);
    const auto pipelines = build_pipelines(cfg, resources);
    const auto& pipeline = pick_persona(pipelines, o.persona);
    auto client = chat_client(cfg);
    const auto outcome = pipeline.ask(o.question, planner_config(cfg), client.get(), cfg.engine);
    if (o.json) {
        Json j{{"answer", outcome.display},
               {"answer_kind", std::string(answer_kind_name(outcome.result.answer.kind))},
               {"planner", std::string(planner_name(outcome.plan.planner))},
               {"plan", serialize_plan(outcome.plan.tree)}};
        if (o.show_trace) {
            j["trace"] = to_json(outcome.result.trace, pipeline.store());
        }
        out << j.dump(2) << '\n';
        return 0;
    }
    out << outcome.display << '\n';
    if (o.show_trace) {
        print_trace(out, outcome.result.trace, pipeline.store());
    }
    return 0;
}

int run_plan(const Options& o, std::ostream& out) {
    const auto cfg = effective_config(o);
    auto client = chat_client(cfg);
    auto outcome = plan_question(o.question, planner_config(cfg), client.get());
    out << serialize_plan(outcome.tree) << '\n';
    return 0;
}

int run_generate(const Options& o, std::ostream& out) {
    auto profile = default_profile(o.persona_name);
    auto persona = generate_persona(profile, o.seed);
    write_generated(persona, o.out_dir);
    const EventStore store(persona.events);
    auto cases = generate_questions(store, profile, o.seed, o.n_questions);
    std::ofstream q(std::filesystem::path(o.out_dir) / "questions.jsonl", std::ios::binary);
    if (!q) {
        throw UsageError("cannot write questions.jsonl in " + o.out_dir);
    }
    write_gold_cases(q, cases);
    out << "wrote " << persona.events.size() << " events (" << persona.planted.size() << " planted duplicates) and "
        << cases.size() << " questions to " << o.out_dir << '\n';
    return 0;
}

int run_eval(const Options& o, std::ostream& out) {
    auto cfg = effective_config(o);
    const auto resources = Resources::load(cfg);
    const auto pipelines = build_pipelines(cfg, resources);
    const auto& pipeline = pick_persona(pipelines, o.persona);
    const auto cases = load_gold_cases(o.cases_path);
    auto client = chat_client(cfg);
    const auto outputs = run_cases(pipeline, cases, planner_config(cfg), client.get(), cfg.engine);
    const auto report = evaluate_run(cases, outputs, cfg.metrics);
    const auto doc = to_json(report);
    if (!o.report_path.empty()) {
        std::ofstream f(o.report_path, std::ios::binary);
        if (!f) {
            throw UsageError("cannot write " + o.report_path);
        }
        f << doc.dump(2) << '\n';
    }
    auto metric = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("null"); };
    out << "cases " << report.n << "  hit@1 " << metric(report.hit_at_1) << "  rlx-hit@1 "
        << metric(report.rlx_hit_at_1) << '\n';
    for (const auto& f : report.failures) {
        out << "  miss " << f.case_id << ": predicted \"" << f.predicted << "\" gold \"" << f.gold << '"';
        if (f.error) {
            out << " (" << *f.error << ')';
        }
        out << '\n';
    }
    return 0;
}

int run_serve(const Options& o, std::ostream& out) {
    auto cfg = effective_config(o);
    if (!o.host.empty()) {
        cfg.host = o.host;
    }
    if (o.port >= 0) {
        cfg.port = o.port;
    }
    auto service = make_service(cfg);
    out << "listening on http://" << cfg.host << ':' << cfg.port << '\n' << std::flush;
    if (!serve(*service, cfg.host, cfg.port)) {
        throw UsageError("cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
    }
    return 0;
}

int run_events(const Options& o, std::ostream& out) {
    const auto cfg = effective_config(o);
    const auto resources = Resources::load(cfg);
    Service service(cfg, build_pipelines(cfg, resources));
    std::map<std::string, std::string> params{{"persona", o.persona},
                                              {"page", std::to_string(o.page)},
                                              {"page_size", std::to_string(o.page_size)}};
    if (!o.query.empty()) {
        params["query"] = o.query;
    }
    const auto reply = service.events(params);
    if (reply.status != 200) {
        throw UsageError(reply.body["error"]["message"].get<std::string>());
    }
    if (o.json) {
        out << reply.body.dump(2) << '\n';
        return 0;
    }
    for (const auto& e : reply.body["events"]) {
        out << e["id"].get<std::string>() << '\t' << e["verbalization"].get<std::string>() << '\n';
    }
    out << reply.body["events"].size() << " of " << reply.body["total"].get<std::size_t>() << " events\n";
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app("Operator-tree question answering over personal event data", "optree");
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);

    auto add_store = [&](CLI::App* sub) {
        sub->add_option("--store", o.stores, "Event JSONL file (repeatable; overrides the config)");
    };
    auto add_planner = [&](CLI::App* sub) {
        sub->add_option("--planner", o.planner, "template, llm or auto")
            ->check(CLI::IsMember({"template", "llm", "auto"}));
    };

    auto* ask = app.add_subcommand("ask", "Answer one question and print the result");
    ask->add_option("--question,-q,question", o.question, "Question text")->required();
    ask->add_option("--persona,-p", o.persona, "Persona to ask about");
    ask->add_option("--reference-date", o.reference_date, "Today, as YYYY-MM-DD");
    ask->add_option("--sources", o.sources, "Comma-separated source kinds");
    ask->add_flag("--trace", o.show_trace, "Print the operator trace");
    ask->add_flag("--json", o.json, "Print JSON");
    add_store(ask);
    add_planner(ask);

    auto* plan = app.add_subcommand("plan", "Print the canonical plan for a question without executing it");
    plan->add_option("question", o.question, "Question text")->required();
    add_planner(plan);

    auto* generate = app.add_subcommand("generate", "Generate a synthetic persona with gold questions");
    generate->add_option("--out,-o", o.out_dir, "Output directory")->required();
    generate->add_option("--seed", o.seed, "Random seed");
    generate->add_option("--persona", o.persona_name, "Persona name (lowercase)");
    generate->add_option("--questions", o.n_questions, "Number of gold questions");

    auto* eval = app.add_subcommand("eval", "Score the pipeline against gold cases");
    eval->add_option("--cases", o.cases_path, "Gold cases (JSONL)")->required()->check(CLI::ExistingFile);
    eval->add_option("--persona,-p", o.persona, "Persona the cases are about");
    eval->add_option("--report", o.report_path, "Write the JSON report here");
    add_store(eval);
    add_planner(eval);

    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP JSON API");
    serve_cmd->add_option("--host", o.host, "Bind address");
    serve_cmd->add_option("--port", o.port, "Port")->check(CLI::Range(0, 65535));
    add_store(serve_cmd);

    auto* events = app.add_subcommand("events", "List or search a persona's events, newest first");
    events->add_option("--persona,-p", o.persona, "Persona")->required();
    events->add_option("--query", o.query, "Substring of the verbalization");
    events->add_option("--page", o.page, "1-based page")->check(CLI::PositiveNumber);
    events->add_option("--page-size", o.page_size, "Events per page")->check(CLI::Range(1, 500));
    events->add_flag("--json", o.json, "Print the JSON page");
    add_store(events);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (*ask) return run_ask(o, out);
        if (*plan) return run_plan(o, out);
        if (*generate) return run_generate(o, out);
        if (*eval) return run_eval(o, out);
        if (*serve_cmd) return run_serve(o, out);
        if (*events) return run_events(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << '\n';
        return 1;
    } catch (const PlanError& e) {
        err << "plan error: " << e.what() << '\n';
        return 1;
    } catch (const PlanningFailed& e) {
        err << "planning failed: " << e.what() << '\n';
        return 1;
    } catch (const ExecError& e) {
        err << "execution failed: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace optree
