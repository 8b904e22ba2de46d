#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace atelier {

// Scripted behavior of the protocol stub.
struct StubScript {
    enum class Mode { Complete, Timeout, NodeError };
    Mode mode = Mode::Complete;
    std::string error_node = "7";
    std::string output_node = "9";
    std::string output_filename = "stub_out.png";
    std::string output_bytes = "STUBIMAGEDATA";
    int progress_steps = 2;

    static StubScript from_file(const std::string& path);
    static StubScript from_json_text(const std::string& text);
};

// In-process generation-protocol stub: HTTP job submission plus a WebSocket
// progress stream, matching the wire format the remote backend speaks.
class StubServer {
public:
    StubServer(int port, StubScript script);  // port 0 picks an ephemeral port
    ~StubServer();

    int port() const { return port_; }

    std::string last_prompt_body() const;
    int prompt_count() const;

    void stop();

private:
    void accept_loop();
    void handle_connection(int fd);
    void handle_ws(int fd, const std::string& client_id, const std::string& key);
    void push_script_events(const std::string& client_id, const std::string& prompt_id);

    StubScript script_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::thread accept_thread_;
    std::atomic<bool> running_{false};

    mutable std::mutex mutex_;
    std::string last_prompt_body_;
    int prompt_count_ = 0;
    std::map<std::string, int> ws_clients_;  // clientId -> fd
    std::vector<std::thread> workers_;
};

}  // namespace atelier
