#pragma once

#include "atelier/backend.hpp"

#include <string>

namespace atelier {

struct RemoteBackendConfig {
    std::string host = "127.0.0.1";
    int port = 8188;
    double default_timeout_s = 600;
    std::string artifacts_dir = "artifacts";

    // "host:port" or "http://host:port"
    static RemoteBackendConfig from_url(const std::string& url);
};

// Speaks the generation server's job protocol: POST /prompt, WebSocket
// progress stream, /history and /view for result retrieval.
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(RemoteBackendConfig config);

    // Throws BackendUnreachable when the server cannot be contacted at all;
    // every post-submission fault maps into a failed/timed-out outcome.
    ExecutionOutcome execute(const WorkflowGraph& graph, double timeout_s) override;

private:
    RemoteBackendConfig config_;
    int next_client_ = 0;
};

}  // namespace atelier
