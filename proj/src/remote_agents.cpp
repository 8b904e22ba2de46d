#include "atelier/remote_agents.hpp"

#include "atelier/util.hpp"

#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <thread>

namespace atelier {

namespace fs = std::filesystem;

ChatConfig ChatConfig::from_env() {
    ChatConfig config;
    if (const char* url = std::getenv("ATELIER_LLM_URL")) config.url = url;
    if (const char* key = std::getenv("ATELIER_LLM_KEY")) config.key = key;
    return config;
}

ChatClient::ChatClient(ChatConfig config) : config_(std::move(config)) {
    std::string rest = config_.url;
    if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
    auto slash = rest.find('/');
    if (slash != std::string::npos) {
        path_ = rest.substr(slash);
        rest = rest.substr(0, slash);
    }
    auto colon = rest.find(':');
    if (colon != std::string::npos) {
        host_ = rest.substr(0, colon);
        port_ = std::stoi(rest.substr(colon + 1));
    } else {
        host_ = rest;
    }
}

std::string ChatClient::complete(const std::vector<ChatMessage>& messages) {
    if (host_.empty()) {
        throw AdapterFailure("no chat endpoint configured (set ATELIER_LLM_URL)");
    }
    ordered_json body = ordered_json::object();
    body["model"] = config_.model;
    ordered_json msgs = ordered_json::array();
    for (const ChatMessage& m : messages) {
        msgs.push_back(ordered_json{{"role", m.role}, {"content", m.content}});
    }
    body["messages"] = msgs;
    body["temperature"] = config_.temperature;
    std::string payload = body.dump();

    std::string last_error;
    int backoff = config_.backoff_ms;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        httplib::Client http(host_, port_);
        http.set_connection_timeout(10, 0);
        http.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!config_.key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.key);
        }
        auto res = http.Post(path_.c_str(), headers, payload, "application/json");
        if (!res) {
            last_error = "no response from " + host_ + ":" + std::to_string(port_);
            continue;
        }
        if (res->status != 200) {
            last_error = "status " + std::to_string(res->status) + ": " + res->body;
            continue;
        }
        try {
            ordered_json doc = ordered_json::parse(res->body);
            if (doc.contains("content")) return doc["content"].get<std::string>();
            last_error = "reply lacked a content field";
        } catch (const std::exception& e) {
            last_error = std::string("unparseable reply: ") + e.what();
        }
    }
    throw AdapterFailure("chat completion failed after retries: " + last_error);
}

PromptSet PromptSet::load(const std::string& prompt_dir) {
    PromptSet set;
    for (const char* role : {"preprocess", "planning", "tools-definition",
                             "workspace-update", "adaptation"}) {
        fs::path path = fs::path(prompt_dir) / (std::string(role) + ".txt");
        if (fs::exists(path)) {
            set.prompts_[role] = read_file(path.string());
        }
    }
    return set;
}

const std::string& PromptSet::get(const std::string& role) const {
    static const std::string empty;
    auto it = prompts_.find(role);
    return it == prompts_.end() ? empty : it->second;
}

ordered_json parse_fenced_json(const std::string& reply) {
    auto open = reply.find("```");
    if (open == std::string::npos) {
        throw AdapterFailure("reply carries no fenced block: " + reply);
    }
    auto line_end = reply.find('\n', open);
    if (line_end == std::string::npos) {
        throw AdapterFailure("malformed fence: " + reply);
    }
    auto close = reply.find("```", line_end);
    if (close == std::string::npos) {
        throw AdapterFailure("unterminated fenced block: " + reply);
    }
    std::string inner = reply.substr(line_end + 1, close - line_end - 1);
    try {
        return ordered_json::parse(inner);
    } catch (const std::exception& e) {
        throw AdapterFailure("fenced block is not valid JSON (" +
                             std::string(e.what()) + "): " + reply);
    }
}

RemotePlanner::RemotePlanner(ChatClient client, PromptSet prompts)
    : client_(std::move(client)), prompts_(std::move(prompts)) {}

PlannerProposal RemotePlanner::propose(const Workspace& workspace,
                                       const std::string& library_context,
                                       const std::vector<std::string>& feedback_history) {
    std::ostringstream user;
    user << "Task: " << workspace.enriched_spec << "\n\n";
    if (!workspace.context_log.empty()) {
        user << "Workspace context:\n";
        for (const std::string& entry : workspace.context_log) {
            user << "- " << entry << "\n";
        }
        user << "\n";
    }
    if (!feedback_history.empty()) {
        user << "Previous failures at this step:\n";
        for (const std::string& fb : feedback_history) {
            user << "- " << fb << "\n";
        }
        user << "\n";
    }
    user << library_context;

    std::string reply = client_.complete(
        {{"system", prompts_.get("planning") + "\n" + prompts_.get("tools-definition")},
         {"user", user.str()}});

    ordered_json doc = parse_fenced_json(reply);
    PlannerProposal proposal;
    if (doc.value("terminate", false)) {
        proposal.terminate = true;
        proposal.rationale = doc.value("rationale", "");
        return proposal;
    }
    SwiCall call;
    call.workflow_name = doc.value("workflow", "");
    if (call.workflow_name.empty()) {
        throw AdapterFailure("proposal names no workflow: " + reply);
    }
    if (doc.contains("arguments")) {
        for (auto it = doc["arguments"].begin(); it != doc["arguments"].end(); ++it) {
            call.arguments[it.key()] = it.value();
        }
    }
    if (doc.contains("constraints")) {
        for (auto it = doc["constraints"].begin(); it != doc["constraints"].end(); ++it) {
            call.constraints[it.key()] = it.value().get<double>();
        }
    }
    proposal.chain.push_back(std::move(call));
    proposal.rationale = doc.value("rationale", "");
    return proposal;
}

RemotePreprocessor::RemotePreprocessor(ChatClient client, PromptSet prompts)
    : client_(std::move(client)), prompts_(std::move(prompts)) {}

std::string RemotePreprocessor::preprocess(const std::string& instruction) {
    return client_.complete(
        {{"system", prompts_.get("preprocess")}, {"user", instruction}});
}

RemoteEvaluator::RemoteEvaluator(ChatClient client, PromptSet prompts)
    : client_(std::move(client)), prompts_(std::move(prompts)) {}

EvalVerdict RemoteEvaluator::evaluate(const std::string& task,
                                      const std::vector<ArtifactRecord>& artifacts,
                                      TaskKind task_kind, EvalThreshold threshold) {
    std::ostringstream user;
    user << "Task: " << task << "\n";
    user << "Task kind: " << task_kind_name(task_kind) << "\n";
    user << "Threshold: " << eval_threshold_name(threshold) << "\n";
    user << "Artifacts:\n";
    for (const ArtifactRecord& a : artifacts) {
        user << "- " << a.path;
        if (a.annotation) user << " (" << a.annotation->summary << ")";
        user << "\n";
    }
    std::string reply = client_.complete(
        {{"system", prompts_.get("workspace-update")}, {"user", user.str()}});
    ordered_json doc = parse_fenced_json(reply);
    EvalVerdict verdict;
    verdict.pass = doc.value("pass", false);
    verdict.failure_analysis = doc.value("failure_analysis", "");
    if (!verdict.pass && verdict.failure_analysis.empty()) {
        verdict.failure_analysis = "evaluation failed without analysis";
    }
    if (doc.contains("dimensions")) {
        for (auto it = doc["dimensions"].begin(); it != doc["dimensions"].end(); ++it) {
            verdict.dimensions[it.key()] = it.value().get<double>();
        }
    }
    return verdict;
}

RemoteAnnotator::RemoteAnnotator(ChatClient client, PromptSet prompts)
    : client_(std::move(client)), prompts_(std::move(prompts)) {}

Annotation RemoteAnnotator::annotate(const std::string& artifact_path) {
    if (!fs::exists(artifact_path)) {
        throw AdapterFailure("artifact missing: " + artifact_path);
    }
    std::string reply = client_.complete(
        {{"system", prompts_.get("workspace-update")},
         {"user", "Describe the artifact at " + artifact_path}});
    Annotation ann;
    ann.artifact_ref = artifact_path;
    ann.summary = reply;
    return ann;
}

}  // namespace atelier
