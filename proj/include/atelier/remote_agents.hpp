#pragma once

#include "atelier/agents.hpp"

#include <map>
#include <string>
#include <vector>

namespace atelier {

struct ChatConfig {
    std::string url;    // http://host:port/path
    std::string key;    // bearer token, may be empty
    std::string model = "gpt-4o";
    double temperature = 0.2;
    int max_retries = 2;
    int backoff_ms = 200;  // doubles per retry

    // Reads ATELIER_LLM_URL / ATELIER_LLM_KEY.
    static ChatConfig from_env();
};

struct ChatMessage {
    std::string role;
    std::string content;
};

// Generic chat-completion client: POST {model, messages[], temperature},
// expects {content} back. Bounded retries with doubling backoff, then
// AdapterFailure.
class ChatClient {
public:
    explicit ChatClient(ChatConfig config);

    std::string complete(const std::vector<ChatMessage>& messages);

private:
    ChatConfig config_;
    std::string host_;
    int port_ = 80;
    std::string path_ = "/";
};

// Role-keyed prompt assets loaded from prompts/<role>.txt.
class PromptSet {
public:
    static PromptSet load(const std::string& prompt_dir);

    const std::string& get(const std::string& role) const;

private:
    std::map<std::string, std::string> prompts_;
};

// Extracts the single fenced JSON block from a model reply. Throws
// AdapterFailure (carrying the raw text) on anything else.
ordered_json parse_fenced_json(const std::string& reply);

class RemotePlanner : public Planner {
public:
    RemotePlanner(ChatClient client, PromptSet prompts);

    PlannerProposal propose(const Workspace& workspace,
                            const std::string& library_context,
                            const std::vector<std::string>& feedback_history) override;

private:
    ChatClient client_;
    PromptSet prompts_;
};

class RemotePreprocessor : public Preprocessor {
public:
    RemotePreprocessor(ChatClient client, PromptSet prompts);

    std::string preprocess(const std::string& instruction) override;

private:
    ChatClient client_;
    PromptSet prompts_;
};

class RemoteEvaluator : public Evaluator {
public:
    RemoteEvaluator(ChatClient client, PromptSet prompts);

    EvalVerdict evaluate(const std::string& task,
                         const std::vector<ArtifactRecord>& artifacts,
                         TaskKind task_kind, EvalThreshold threshold) override;

private:
    ChatClient client_;
    PromptSet prompts_;
};

class RemoteAnnotator : public Annotator {
public:
    RemoteAnnotator(ChatClient client, PromptSet prompts);

    Annotation annotate(const std::string& artifact_path) override;

private:
    ChatClient client_;
    PromptSet prompts_;
};

}  // namespace atelier
