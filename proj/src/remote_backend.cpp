#include "atelier/remote_backend.hpp"

#include "atelier/util.hpp"
#include "atelier/ws.hpp"

#include <httplib.h>

#include <cassert>
#include <chrono>
#include <filesystem>

namespace atelier {

namespace fs = std::filesystem;

RemoteBackendConfig RemoteBackendConfig::from_url(const std::string& url) {
    RemoteBackendConfig config;
    std::string rest = url;
    if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
    auto slash = rest.find('/');
    if (slash != std::string::npos) rest = rest.substr(0, slash);
    auto colon = rest.find(':');
    if (colon != std::string::npos) {
        config.host = rest.substr(0, colon);
        config.port = std::stoi(rest.substr(colon + 1));
    } else if (!rest.empty()) {
        config.host = rest;
    }
    return config;
}

RemoteBackend::RemoteBackend(RemoteBackendConfig config)
    : config_(std::move(config)) {}

ExecutionOutcome RemoteBackend::execute(const WorkflowGraph& graph,
                                        double timeout_s) {
    assert(validate_dag(graph, true).ok());
    if (timeout_s <= 0) timeout_s = config_.default_timeout_s;

    auto started = std::chrono::steady_clock::now();
    auto elapsed_s = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             started)
            .count();
    };
    auto failed = [&](const std::string& diagnostics) {
        ExecutionOutcome outcome;
        outcome.status = ExecutionOutcome::Status::Failed;
        outcome.diagnostics = diagnostics;
        outcome.duration_s = elapsed_s();
        return outcome;
    };

    std::string client_id =
        "atelier-" + fnv1a64_hex(config_.host + std::to_string(++next_client_) +
                                 std::to_string(std::chrono::steady_clock::now()
                                                    .time_since_epoch()
                                                    .count()));

    // Progress stream is opened before submission so no event is missed.
    std::string ws_error;
    bool refused = false;
    auto ws = WsClient::connect(config_.host, config_.port,
                                "/ws?clientId=" + client_id, 5000, &ws_error,
                                &refused);
    if (!ws) {
        if (refused) {
            throw BackendUnreachable("server unreachable at " + config_.host + ":" +
                                     std::to_string(config_.port) + ": " + ws_error);
        }
        return failed("websocket handshake failed: " + ws_error);
    }

    httplib::Client http(config_.host, config_.port);
    http.set_connection_timeout(5, 0);
    http.set_read_timeout(30, 0);

    ordered_json body = ordered_json::object();
    body["prompt"] = graph.to_json();
    body["client_id"] = client_id;
    auto res = http.Post("/prompt", body.dump(), "application/json");
    if (!res) {
        throw BackendUnreachable("POST /prompt got no response from " +
                                 config_.host + ":" + std::to_string(config_.port));
    }
    if (res->status != 200) {
        return failed("server rejected submission with status " +
                      std::to_string(res->status) + ": " + res->body);
    }
    std::string prompt_id;
    try {
        prompt_id = ordered_json::parse(res->body).value("prompt_id", "");
    } catch (const std::exception&) {
    }
    if (prompt_id.empty()) {
        return failed("submission response lacked a prompt_id: " + res->body);
    }

    // Consume progress until the terminal message for this prompt.
    bool completed = false;
    while (true) {
        double remaining = timeout_s - elapsed_s();
        if (remaining <= 0) {
            ExecutionOutcome outcome;
            outcome.status = ExecutionOutcome::Status::TimedOut;
            outcome.diagnostics = "no terminal message within " +
                                  std::to_string(timeout_s) + " s";
            outcome.duration_s = elapsed_s();
            return outcome;
        }
        auto frame = ws->read_text(static_cast<int>(remaining * 1000));
        if (!frame) {
            ExecutionOutcome outcome;
            outcome.status = ExecutionOutcome::Status::TimedOut;
            outcome.diagnostics = "progress stream closed or idle past " +
                                  std::to_string(timeout_s) + " s";
            outcome.duration_s = elapsed_s();
            return outcome;
        }
        ordered_json msg;
        try {
            msg = ordered_json::parse(*frame);
        } catch (const std::exception&) {
            continue;
        }
        std::string type = msg.value("type", "");
        ordered_json data = msg.value("data", ordered_json::object());
        if (data.value("prompt_id", "") != prompt_id) continue;
        if (type == "executed") {
            completed = true;
            break;
        }
        if (type == "execution_error") {
            return failed("node " + data.value("node_id", "?") + " failed: " +
                          data.value("exception_message", "unknown error"));
        }
        // "executing" / "progress" messages carry no terminal meaning here
    }
    ws->close();
    (void)completed;

    auto history = http.Get(("/history/" + prompt_id).c_str());
    if (!history || history->status != 200) {
        return failed("could not fetch /history/" + prompt_id);
    }

    ExecutionOutcome outcome;
    outcome.status = ExecutionOutcome::Status::Completed;
    fs::create_directories(config_.artifacts_dir);
    try {
        ordered_json doc = ordered_json::parse(history->body);
        ordered_json outputs =
            doc.value(prompt_id, ordered_json::object()).value("outputs", ordered_json::object());
        for (auto it = outputs.begin(); it != outputs.end(); ++it) {
            const std::string& node_id = it.key();
            int index = 0;
            for (const char* field : {"images", "videos", "gifs"}) {
                for (const ordered_json& entry :
                     it.value().value(field, ordered_json::array())) {
                    std::string filename = entry.value("filename", "");
                    if (filename.empty()) continue;
                    auto view = http.Get(
                        ("/view?filename=" + filename + "&type=output").c_str());
                    if (!view || view->status != 200) {
                        return failed("could not download artifact " + filename);
                    }
                    fs::path path = fs::path(config_.artifacts_dir) /
                                    (node_id + "_" + std::to_string(index++) + "_" +
                                     filename);
                    write_file(path.string(), view->body);
                    outcome.artifacts.emplace_back(node_id, path.string());
                }
            }
        }
    } catch (const std::exception& e) {
        return failed(std::string("malformed history payload: ") + e.what());
    }
    outcome.duration_s = elapsed_s();
    return outcome;
}

}  // namespace atelier
