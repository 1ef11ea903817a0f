#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "optree/config.hpp"
#include "optree/engine.hpp"
#include "optree/evalkit.hpp"
#include "optree/extract.hpp"
#include "optree/qud.hpp"
#include "optree/retrieve.hpp"

namespace optree {

/// Lexical resources shared by every persona of a deployment.
struct Resources {
    Lexicon lexicon;
    Gazetteer gazetteer;
    AliasTable aliases;

    static Resources load(const AppConfig& cfg);
    /// The files shipped in the data directory.
    static Resources bundled();
};

struct AskOutcome {
    PlanOutcome plan;
    ExecutionResult result;
    std::string display;
    double qud_millis = 0;
};

/// One persona's store with its index, retriever and engine. Members refer
/// to each other, so a Pipeline never moves; hold it by unique_ptr.
class Pipeline {
public:
    Pipeline(EventStore store, const Resources& resources, const RetrievalConfig& retrieval,
             std::shared_ptr<const Scorer> scorer = nullptr, std::shared_ptr<const Extractor> extractor = nullptr);
    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    const EventStore& store() const { return store_; }
    const SparseIndex& index() const { return index_; }
    const Retriever& retriever() const { return *retriever_; }
    const Engine& engine() const { return *engine_; }

    ExecutionResult execute(const OperatorTree& tree, const EngineConfig& cfg = {}) const;
    /// Plans then executes. Throws PlanningFailed or ExecError.
    AskOutcome ask(std::string_view question, const PlannerConfig& planner, ChatClient* client,
                   const EngineConfig& cfg = {}) const;

private:
    EventStore store_;
    SparseIndex index_;
    Lexicon lexicon_;
    AliasTable aliases_;
    std::shared_ptr<const Scorer> scorer_;
    std::shared_ptr<const Extractor> extractor_;
    std::unique_ptr<Retriever> retriever_;
    std::unique_ptr<Engine> engine_;
};

/// Configured scorer and extractor; null from make_scorer means the
/// pipeline's own coverage scorer.
std::shared_ptr<const Scorer> make_scorer(const AppConfig& cfg);
std::shared_ptr<const Extractor> make_extractor(const AppConfig& cfg, const Gazetteer& gazetteer);

/// One pipeline per persona found in the configured stores.
std::map<std::string, std::unique_ptr<Pipeline>> build_pipelines(const AppConfig& cfg, const Resources& resources);

/// Runs every case through `pipeline` and records the rendered answers.
std::vector<SystemOutput> run_cases(const Pipeline& pipeline, const std::vector<GoldCase>& cases,
                                    const PlannerConfig& planner, ChatClient* client, const EngineConfig& cfg = {});

} // namespace optree
