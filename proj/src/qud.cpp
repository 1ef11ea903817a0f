#include "optree/qud.hpp"

#include <deque>

namespace optree {

std::optional<OperatorTree> template_plan(std::string_view question) {
    auto match = match_question(question);
    if (!match) {
        return std::nullopt;
    }
    return match->tmpl->build(match->slots);
}

// ---------------------------------------------------------------------------
// Clients
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    while (!text.empty()) {
        auto nl = text.find('\n');
        out.push_back(text.substr(0, nl));
        if (nl == std::string_view::npos) {
            break;
        }
        text.remove_prefix(nl + 1);
    }
    return out;
}

std::optional<std::string> pending_of(const std::vector<ChatMessage>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role != "user") {
            continue;
        }
        auto pos = it->content.rfind(pending_marker);
        if (pos == std::string::npos) {
            return std::nullopt;
        }
        auto rest = std::string_view(it->content).substr(pos + pending_marker.size());
        return trim(rest.substr(0, rest.find('\n')));
    }
    return std::nullopt;
}

} // namespace

void LlmClientConfig::validate() const {
    if (max_retries < 0) {
        throw ConfigError("llm max_retries must be >= 0");
    }
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw ConfigError("llm temperature must lie in [0, 2]");
    }
}

HttpChatClient::HttpChatClient(std::shared_ptr<const JsonTransport> transport, std::string model, double temperature)
    : transport_(std::move(transport)), model_(std::move(model)), temperature_(temperature) {}

HttpChatClient::HttpChatClient(const LlmClientConfig& cfg)
    : HttpChatClient(std::make_shared<HttpJsonTransport>(cfg.endpoint, bearer_headers(cfg.api_key_env)), cfg.model,
                     cfg.temperature) {
    cfg.validate();
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
    Json body{{"model", model_}, {"messages", Json::array()}, {"temperature", temperature_}};
    for (const auto& m : messages) {
        body["messages"].push_back(Json{{"role", m.role}, {"content", m.content}});
    }
    const Json response = transport_->post(body);
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception&) {
        throw TransportError("chat response lacks choices[0].message.content");
    }
}

TranscriptChatClient::TranscriptChatClient(std::string_view transcript) {
    std::string question;
    std::string answer;
    bool in_answer = false;
    auto flush = [&] {
        if (!question.empty()) {
            answers_[ascii_lower(question)] = trim(answer);
        }
        question.clear();
        answer.clear();
        in_answer = false;
    };
    for (auto line : split_lines(transcript)) {
        const auto t = trim(line);
        if (t == "---") {
            flush();
        } else if (t.starts_with("Q:")) {
            question = trim(std::string_view(t).substr(2));
        } else if (t.starts_with("A:")) {
            answer = t.substr(2);
            in_answer = true;
        } else if (in_answer) {
            answer += "\n" + std::string(line);
        }
    }
    flush();
}

TranscriptChatClient TranscriptChatClient::load(const std::filesystem::path& path) {
    return TranscriptChatClient(read_text_file(path));
}

std::string TranscriptChatClient::complete(const std::vector<ChatMessage>& messages) {
    ++calls_;
    auto pending = pending_of(messages);
    if (!pending) {
        return "(no pending sub-question in prompt)";
    }
    auto it = answers_.find(ascii_lower(*pending));
    return it == answers_.end() ? "(no transcript entry for \"" + *pending + "\")" : it->second;
}

std::string ScriptedChatClient::complete(const std::vector<ChatMessage>& messages) {
    prompts_.push_back(messages);
    if (replies_.empty()) {
        return {};
    }
    return replies_[std::min(prompts_.size(), replies_.size()) - 1];
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view instructions =
    R"(You turn questions about a person's own event history into an operator tree, one operator at a time.

Reply with exactly one operator in the plan syntax. Write each input of the operator as a placeholder
?"sub-question" describing what that input must contain. Use RETRIEVE when the pending sub-question names
events directly; RETRIEVE has no inputs.

Operators:
  (RETRIEVE "query")
  (EXTRACT ?"input" [key, ...])
  (FILTER ?"input" predicate)
  (JOIN ?"left" ?"right" predicate)        predicates see left.key and right.key
  (GROUP_BY ?"input" [key, ...])
  (UNNEST ?"input")
  (MAP ?"input" [key := expression, ...])  `group` is the member list of a group
  (APPLY ?"input" len) or (APPLY ?"input" (distinct key))
  (SUM|AVG|MAX|MIN|ARGMAX|ARGMIN ?"input" key)
Functions: eq ne lt le gt ge and or not contains same_day within year month date weekday len + - * / list.
Derived keys: date, start_time, end_time, month, year, weekday. REF_DATE is today.
Event sources: music stream, movie stream, tv series stream, workout, purchase, calendar entry, social media post, mail.)";

std::string strip_fences(std::string_view reply) {
    auto text = trim(reply);
    if (text.starts_with("```")) {
        auto nl = text.find('\n');
        auto close = text.rfind("```");
        if (nl != std::string::npos && close > nl) {
            text = trim(std::string_view(text).substr(nl + 1, close - nl - 1));
        }
    }
    return text;
}

/// Nullopt when the emission is usable, otherwise the diagnostic to send back.
std::optional<std::string> check_emission(const OperatorNode& node) {
    if (node.op == Op::hole) {
        return "the reply is only a placeholder; emit an operator";
    }
    for (const auto& c : node.children) {
        if (c.op != Op::hole) {
            return "emit exactly one operator and write its inputs as ?\"sub-question\" placeholders";
        }
        if (!c.sub_question || trim(*c.sub_question).empty()) {
            return "placeholders need a non-empty sub-question";
        }
    }
    return std::nullopt;
}

OperatorNode* node_at(OperatorNode& root, const std::vector<std::size_t>& path) {
    OperatorNode* n = &root;
    for (auto i : path) {
        n = &n->children[i];
    }
    return n;
}

} // namespace

std::vector<ChatMessage> decomposition_prompt(std::string_view pending, const OperatorTree& partial,
                                              std::string_view icl_examples) {
    std::vector<ChatMessage> messages;
    std::string system(instructions);
    if (!trim(icl_examples).empty()) {
        system += "\n\nExamples of decomposition steps:\n\n";
        system += icl_examples;
    }
    messages.push_back({"system", std::move(system)});
    messages.push_back({"user", "Tree so far:\n" + serialize_plan(partial) + "\n" + std::string(pending_marker) +
                                    std::string(pending)});
    return messages;
}

DecompositionStep llm_decompose_step(std::string_view pending, const OperatorTree& partial, ChatClient& client,
                                     const DecomposeOptions& options) {
    auto messages = decomposition_prompt(pending, partial, options.icl_examples);
    std::string last_problem;
    const int attempts = 1 + std::max(0, options.max_retries);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        const auto reply = client.complete(messages);
        std::optional<std::string> problem;
        OperatorNode node;
        try {
            ParseOptions po;
            po.allow_holes = true;
            node = parse_plan(strip_fences(reply), po);
            problem = check_emission(node);
        } catch (const PlanError& e) {
            problem = "parse error at offset " + std::to_string(e.position()) + ": " + e.what();
        }
        if (!problem) {
            DecompositionStep step;
            step.pending = std::string(pending);
            node.sub_question = std::string(pending);
            for (const auto& c : node.children) {
                step.placeholders.push_back(*c.sub_question);
            }
            step.node = std::move(node);
            step.attempts = attempt;
            return step;
        }
        last_problem = *problem;
        messages.push_back({"assistant", reply});
        messages.push_back({"user", "That reply was rejected: " + *problem + "\n" + std::string(pending_marker) +
                                        std::string(pending)});
    }
    throw PlanningFailed("no usable operator for \"" + std::string(pending) + "\" after " + std::to_string(attempts) +
                         " attempts; last problem: " + last_problem);
}

OperatorTree llm_plan(std::string_view question, ChatClient& client, const DecomposeOptions& options) {
    OperatorTree root = make_hole(std::string(question));
    std::deque<std::vector<std::size_t>> queue{{}};
    while (!queue.empty()) {
        auto path = std::move(queue.front());
        queue.pop_front();
        if (path.size() + 1 > options.max_depth) {
            throw DepthExceeded("decomposition of \"" + std::string(question) + "\" exceeds depth " +
                                std::to_string(options.max_depth));
        }
        OperatorNode* hole = node_at(root, path);
        const std::string pending = hole->sub_question.value_or("");
        auto step = llm_decompose_step(pending, root, client, options);
        *node_at(root, path) = std::move(step.node);
        for (std::size_t i = 0; i < step.placeholders.size(); ++i) {
            auto child = path;
            child.push_back(i);
            queue.push_back(std::move(child));
        }
        if (options.on_step) {
            options.on_step(root);
        }
    }
    auto diagnostics = validate_plan(root);
    if (has_errors(diagnostics)) {
        std::string msg = "decomposed plan is invalid:";
        for (const auto& d : diagnostics) {
            if (d.severity == Diagnostic::Severity::error) {
                msg += " [" + d.node_id + "] " + d.message + ";";
            }
        }
        throw PlanningFailed(msg);
    }
    return root;
}

// ---------------------------------------------------------------------------
// Planner selection
// ---------------------------------------------------------------------------

std::string_view planner_name(PlannerKind k) {
    return k == PlannerKind::template_catalog ? "template" : "llm";
}

std::optional<PlannerKind> parse_planner_name(std::string_view name) {
    auto n = ascii_lower(name);
    if (n == "template") {
        return PlannerKind::template_catalog;
    }
    if (n == "llm") {
        return PlannerKind::llm;
    }
    return std::nullopt;
}

PlanOutcome plan_question(std::string_view question, const PlannerConfig& cfg, ChatClient* client) {
    if (cfg.order.empty()) {
        throw PlanningFailed("no planner enabled");
    }
    std::vector<std::string> reasons;
    for (auto kind : cfg.order) {
        if (kind == PlannerKind::template_catalog) {
            if (auto tree = template_plan(question)) {
                return {std::move(*tree), kind};
            }
            reasons.emplace_back("template: no catalog template matches");
            continue;
        }
        if (!client) {
            reasons.emplace_back("llm: no client configured");
            continue;
        }
        try {
            return {llm_plan(question, *client, cfg.llm), kind};
        } catch (const PlanningFailed& e) {
            reasons.push_back(std::string("llm: ") + e.what());
        } catch (const DepthExceeded& e) {
            reasons.push_back(std::string("llm: ") + e.what());
        } catch (const TransportError& e) {
            reasons.push_back(std::string("llm: ") + e.what());
        }
    }
    std::string msg = "could not plan \"" + std::string(question) + "\"";
    for (const auto& r : reasons) {
        msg += "; " + r;
    }
    throw PlanningFailed(msg);
}

} // namespace optree
