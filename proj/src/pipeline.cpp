#include "optree/pipeline.hpp"

#include <chrono>

#include "optree/remote.hpp"

namespace optree {

Resources Resources::load(const AppConfig& cfg) {
    return Resources{Lexicon::load(cfg.stopwords, cfg.expansions), Gazetteer::load(cfg.gazetteer),
                     AliasTable::load(cfg.aliases)};
}

Resources Resources::bundled() {
    return load(default_config());
}

Pipeline::Pipeline(EventStore store, const Resources& resources, const RetrievalConfig& retrieval,
                   std::shared_ptr<const Scorer> scorer, std::shared_ptr<const Extractor> extractor)
    : store_(std::move(store)),
      index_(build_index(store_)),
      lexicon_(resources.lexicon),
      aliases_(resources.aliases),
      scorer_(std::move(scorer)),
      extractor_(std::move(extractor)) {
    retrieval.validate();
    if (!scorer_) {
        scorer_ = std::make_shared<CoverageScorer>(lexicon_);
    }
    if (!extractor_) {
        extractor_ = std::make_shared<GazetteerExtractor>(resources.gazetteer);
    }
    retriever_ = std::make_unique<Retriever>(store_, index_, lexicon_, *scorer_, retrieval);
    engine_ = std::make_unique<Engine>(store_, *retriever_, aliases_, *extractor_);
}

ExecutionResult Pipeline::execute(const OperatorTree& tree, const EngineConfig& cfg) const {
    return engine_->execute(tree, cfg);
}

AskOutcome Pipeline::ask(std::string_view question, const PlannerConfig& planner, ChatClient* client,
                         const EngineConfig& cfg) const {
    AskOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    out.plan = plan_question(question, planner, client);
    out.qud_millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out.result = engine_->execute(out.plan.tree, cfg);
    out.display = render_answer(out.result.answer, store_);
    return out;
}

std::shared_ptr<const Scorer> make_scorer(const AppConfig& cfg) {
    if (cfg.scorer == "remote") {
        return std::make_shared<RemoteScorer>(std::make_shared<HttpJsonTransport>(cfg.scorer_endpoint));
    }
    return nullptr;
}

std::shared_ptr<const Extractor> make_extractor(const AppConfig& cfg, const Gazetteer& gazetteer) {
    if (cfg.extractor == "remote") {
        return std::make_shared<RemoteExtractor>(std::make_shared<HttpJsonTransport>(cfg.extractor_endpoint));
    }
    return std::make_shared<GazetteerExtractor>(gazetteer);
}

std::map<std::string, std::unique_ptr<Pipeline>> build_pipelines(const AppConfig& cfg, const Resources& resources) {
    std::vector<Event> all;
    for (const auto& path : cfg.stores) {
        auto store = load_events(path);
        all.insert(all.end(), store.events().begin(), store.events().end());
    }
    const EventStore merged(std::move(all));
    std::map<std::string, std::unique_ptr<Pipeline>> out;
    for (const auto& persona : merged.personas()) {
        out.emplace(persona, std::make_unique<Pipeline>(merged.subset(persona), resources, cfg.retrieval,
                                                        make_scorer(cfg),
                                                        make_extractor(cfg, resources.gazetteer)));
    }
    return out;
}

std::vector<SystemOutput> run_cases(const Pipeline& pipeline, const std::vector<GoldCase>& cases,
                                    const PlannerConfig& planner, ChatClient* client, const EngineConfig& cfg) {
    std::vector<SystemOutput> out;
    out.reserve(cases.size());
    for (const auto& c : cases) {
        SystemOutput o;
        o.case_id = c.id;
        o.trace_ref = c.id;
        try {
            o.predicted = pipeline.ask(c.question, planner, client, cfg).display;
        } catch (const Error& e) {
            o.error = e.what();
        }
        out.push_back(std::move(o));
    }
    return out;
}

} // namespace optree
