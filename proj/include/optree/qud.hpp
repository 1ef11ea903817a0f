#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "optree/catalog.hpp"
#include "optree/plan.hpp"
#include "optree/remote.hpp"

namespace optree {

class PlanningFailed : public Error {
public:
    using Error::Error;
};

class DepthExceeded : public Error {
public:
    using Error::Error;
};

/// Instantiates the catalog template the question matches; nullopt when no
/// template matches.
std::optional<OperatorTree> template_plan(std::string_view question);

// ---------------------------------------------------------------------------
// Chat clients
// ---------------------------------------------------------------------------

struct ChatMessage {
    std::string role; // "system", "user" or "assistant"
    std::string content;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Returns the assistant's reply. Throws TransportError.
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

struct LlmClientConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "OPTREE_LLM_API_KEY";
    int max_retries = 3;
    double temperature = 0.0;
    std::string icl_path;

    void validate() const; // throws ConfigError
};

/// Chat-completion endpoint: {model, messages, temperature} ->
/// choices[0].message.content.
class HttpChatClient : public ChatClient {
public:
    HttpChatClient(std::shared_ptr<const JsonTransport> transport, std::string model, double temperature);
    /// HTTP transport from the config, key read from the environment.
    explicit HttpChatClient(const LlmClientConfig& cfg);

    std::string complete(const std::vector<ChatMessage>& messages) override;

private:
    std::shared_ptr<const JsonTransport> transport_;
    std::string model_;
    double temperature_;
};

/// Offline client answering from a transcript of decomposition steps.
///
/// Transcript format: blocks separated by a line holding only `---`; each
/// block has a `Q: <pending sub-question>` line and an `A: <emission>` line
/// (the emission may continue on following lines). Lookup is by the pending
/// sub-question of the latest prompt, case-insensitively.
class TranscriptChatClient : public ChatClient {
public:
    explicit TranscriptChatClient(std::string_view transcript);
    static TranscriptChatClient load(const std::filesystem::path& path);

    std::string complete(const std::vector<ChatMessage>& messages) override;
    std::size_t calls() const { return calls_; }

private:
    std::map<std::string, std::string> answers_;
    std::size_t calls_ = 0;
};

/// Replies with a fixed sequence (the last reply repeats) and records the
/// prompts it received.
class ScriptedChatClient : public ChatClient {
public:
    explicit ScriptedChatClient(std::vector<std::string> replies) : replies_(std::move(replies)) {}

    std::string complete(const std::vector<ChatMessage>& messages) override;
    const std::vector<std::vector<ChatMessage>>& prompts() const { return prompts_; }

private:
    std::vector<std::string> replies_;
    std::vector<std::vector<ChatMessage>> prompts_;
};

/// `{pending}` line used in prompts; clients that key on the pending
/// sub-question look for it in the last user message.
inline constexpr std::string_view pending_marker = "Pending sub-question: ";

// ---------------------------------------------------------------------------
// Incremental decomposition
// ---------------------------------------------------------------------------

struct DecompositionStep {
    std::string pending;
    /// The emitted operator; its children are holes naming new sub-questions.
    OperatorNode node;
    std::vector<std::string> placeholders;
    int attempts = 1;
};

struct DecomposeOptions {
    int max_retries = 3;
    std::size_t max_depth = 8;
    /// Plain-text decomposition examples included in every prompt.
    std::string icl_examples;
    /// Called with the partial tree after every step.
    std::function<void(const OperatorTree&)> on_step;
};

/// Messages sent for one step; exposed for tests and debugging.
std::vector<ChatMessage> decomposition_prompt(std::string_view pending, const OperatorTree& partial,
                                              std::string_view icl_examples);

/// Asks the client for one operator that reduces `pending`. Retries on
/// unparseable or invalid emissions with the diagnostic appended, then
/// throws PlanningFailed.
DecompositionStep llm_decompose_step(std::string_view pending, const OperatorTree& partial, ChatClient& client,
                                     const DecomposeOptions& options = {});

/// Breadth-first expansion of placeholders until none remain. Throws
/// PlanningFailed or DepthExceeded.
OperatorTree llm_plan(std::string_view question, ChatClient& client, const DecomposeOptions& options = {});

// ---------------------------------------------------------------------------
// Planner selection
// ---------------------------------------------------------------------------

enum class PlannerKind { template_catalog, llm };

std::string_view planner_name(PlannerKind k);
std::optional<PlannerKind> parse_planner_name(std::string_view name);

struct PlannerConfig {
    std::vector<PlannerKind> order = {PlannerKind::template_catalog, PlannerKind::llm};
    DecomposeOptions llm;
};

struct PlanOutcome {
    OperatorTree tree;
    PlannerKind planner = PlannerKind::template_catalog;
};

/// Tries the planners in order; the LLM planner is skipped when `client` is
/// null. Throws PlanningFailed when none produce a plan.
PlanOutcome plan_question(std::string_view question, const PlannerConfig& cfg, ChatClient* client);

} // namespace optree
