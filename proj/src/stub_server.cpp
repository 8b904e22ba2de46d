#include "atelier/stub_server.hpp"

#include "atelier/graph.hpp"
#include "atelier/util.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <cstring>
#include <sstream>

namespace atelier {

namespace {

constexpr const char* kWsGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

bool write_all(int fd, const char* buf, size_t n) {
    size_t sent = 0;
    while (sent < n) {
        ssize_t k = ::send(fd, buf + sent, n - sent, MSG_NOSIGNAL);
        if (k <= 0) return false;
        sent += static_cast<size_t>(k);
    }
    return true;
}

void send_ws_text(int fd, const std::string& payload) {
    std::string frame;
    frame.push_back(static_cast<char>(0x81));
    size_t n = payload.size();
    if (n < 126) {
        frame.push_back(static_cast<char>(n));
    } else {
        frame.push_back(126);
        frame.push_back(static_cast<char>(n >> 8));
        frame.push_back(static_cast<char>(n & 0xff));
    }
    frame += payload;
    write_all(fd, frame.data(), frame.size());
}

struct HttpRequest {
    std::string method;
    std::string target;
    std::map<std::string, std::string> headers;
    std::string body;
};

bool read_request(int fd, HttpRequest* req) {
    std::string head;
    char c;
    while (head.find("\r\n\r\n") == std::string::npos) {
        pollfd pfd{fd, POLLIN, 0};
        if (::poll(&pfd, 1, 10000) <= 0) return false;
        ssize_t k = ::recv(fd, &c, 1, 0);
        if (k <= 0) return false;
        head += c;
        if (head.size() > 65536) return false;
    }

    std::istringstream in(head);
    std::string line;
    std::getline(in, line);
    {
        std::istringstream rl(line);
        rl >> req->method >> req->target;
    }
    while (std::getline(in, line)) {
        auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        std::string name = trim(line.substr(0, colon));
        for (char& ch : name) ch = static_cast<char>(tolower(ch));
        req->headers[name] = trim(line.substr(colon + 1));
    }

    size_t content_length = 0;
    if (auto it = req->headers.find("content-length"); it != req->headers.end()) {
        content_length = std::stoul(it->second);
    }
    while (req->body.size() < content_length) {
        char buf[4096];
        pollfd pfd{fd, POLLIN, 0};
        if (::poll(&pfd, 1, 10000) <= 0) return false;
        ssize_t k = ::recv(fd, buf,
                           std::min(sizeof(buf), content_length - req->body.size()), 0);
        if (k <= 0) return false;
        req->body.append(buf, static_cast<size_t>(k));
    }
    return true;
}

void send_response(int fd, int status, const std::string& content_type,
                   const std::string& body) {
    std::ostringstream out;
    out << "HTTP/1.1 " << status << (status == 200 ? " OK" : " Error") << "\r\n"
        << "Content-Type: " << content_type << "\r\n"
        << "Content-Length: " << body.size() << "\r\n"
        << "Connection: close\r\n\r\n"
        << body;
    std::string text = out.str();
    write_all(fd, text.data(), text.size());
}

std::string query_param(const std::string& target, const std::string& name) {
    auto q = target.find('?');
    if (q == std::string::npos) return "";
    std::string query = target.substr(q + 1);
    std::istringstream in(query);
    std::string pair;
    while (std::getline(in, pair, '&')) {
        auto eq = pair.find('=');
        if (eq != std::string::npos && pair.substr(0, eq) == name) {
            return pair.substr(eq + 1);
        }
    }
    return "";
}

std::string sha1_base64(const std::string& input) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(input.data(), input.size(), digest, &len, EVP_sha1(), nullptr);
    return base64_encode(digest, len);
}

}  // namespace

StubScript StubScript::from_json_text(const std::string& text) {
    ordered_json doc = ordered_json::parse(text);
    StubScript script;
    std::string mode = doc.value("scenario", "complete");
    if (mode == "complete") {
        script.mode = Mode::Complete;
    } else if (mode == "timeout") {
        script.mode = Mode::Timeout;
    } else if (mode == "node-error") {
        script.mode = Mode::NodeError;
    } else {
        throw std::runtime_error("unknown stub scenario: " + mode);
    }
    script.error_node = doc.value("error_node", script.error_node);
    script.output_node = doc.value("output_node", script.output_node);
    script.output_filename = doc.value("output_filename", script.output_filename);
    script.progress_steps = doc.value("progress_steps", script.progress_steps);
    return script;
}

StubScript StubScript::from_file(const std::string& path) {
    return from_json_text(read_file(path));
}

StubServer::StubServer(int port, StubScript script) : script_(std::move(script)) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("stub server: socket() failed");
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listen_fd_);
        throw std::runtime_error("stub server: bind failed on port " +
                                 std::to_string(port));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    ::listen(listen_fd_, 16);
    running_ = true;
    accept_thread_ = std::thread([this] { accept_loop(); });
}

StubServer::~StubServer() { stop(); }

void StubServer::stop() {
    if (!running_.exchange(false)) return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (accept_thread_.joinable()) accept_thread_.join();
    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (auto& [id, fd] : ws_clients_) {
            ::shutdown(fd, SHUT_RDWR);
            ::close(fd);
        }
        ws_clients_.clear();
    }
    for (std::thread& t : workers_) {
        if (t.joinable()) t.join();
    }
    workers_.clear();
}

std::string StubServer::last_prompt_body() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return last_prompt_body_;
}

int StubServer::prompt_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return prompt_count_;
}

void StubServer::accept_loop() {
    while (running_) {
        sockaddr_in peer{};
        socklen_t len = sizeof(peer);
        int fd = ::accept(listen_fd_, reinterpret_cast<sockaddr*>(&peer), &len);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        std::lock_guard<std::mutex> lock(mutex_);
        workers_.emplace_back([this, fd] { handle_connection(fd); });
    }
}

void StubServer::handle_connection(int fd) {
    HttpRequest req;
    if (!read_request(fd, &req)) {
        ::close(fd);
        return;
    }

    if (req.target.rfind("/ws", 0) == 0 &&
        req.headers.count("sec-websocket-key")) {
        handle_ws(fd, query_param(req.target, "clientId"),
                  req.headers["sec-websocket-key"]);
        return;
    }

    if (req.method == "POST" && req.target == "/prompt") {
        std::string client_id;
        std::string prompt_id;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            last_prompt_body_ = req.body;
            prompt_id = "p" + std::to_string(++prompt_count_);
        }
        try {
            ordered_json body = ordered_json::parse(req.body);
            client_id = body.value("client_id", "");
        } catch (const std::exception&) {
            send_response(fd, 400, "application/json", R"({"error":"bad body"})");
            ::close(fd);
            return;
        }
        send_response(fd, 200, "application/json",
                      ordered_json{{"prompt_id", prompt_id}}.dump());
        ::close(fd);
        push_script_events(client_id, prompt_id);
        return;
    }

    if (req.method == "GET" && req.target.rfind("/history/", 0) == 0) {
        std::string prompt_id = req.target.substr(strlen("/history/"));
        ordered_json outputs = ordered_json::object();
        if (script_.mode == StubScript::Mode::Complete) {
            outputs[script_.output_node] = ordered_json{
                {"images", ordered_json::array(
                               {ordered_json{{"filename", script_.output_filename},
                                             {"subfolder", ""},
                                             {"type", "output"}}})}};
        }
        ordered_json doc = ordered_json::object();
        doc[prompt_id] = ordered_json{{"outputs", outputs}};
        send_response(fd, 200, "application/json", doc.dump());
        ::close(fd);
        return;
    }

    if (req.method == "GET" && req.target.rfind("/view", 0) == 0) {
        send_response(fd, 200, "application/octet-stream", script_.output_bytes);
        ::close(fd);
        return;
    }

    send_response(fd, 404, "text/plain", "not found");
    ::close(fd);
}

void StubServer::handle_ws(int fd, const std::string& client_id,
                           const std::string& key) {
    std::string accept = sha1_base64(key + kWsGuid);
    std::string response = "HTTP/1.1 101 Switching Protocols\r\n"
                           "Upgrade: websocket\r\n"
                           "Connection: Upgrade\r\n"
                           "Sec-WebSocket-Accept: " + accept + "\r\n\r\n";
    write_all(fd, response.data(), response.size());
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ws_clients_[client_id] = fd;
    }
    // Keep the socket open; frames are pushed from /prompt handling. Drain
    // anything the client sends until it closes or the server stops.
    char buf[1024];
    while (running_) {
        pollfd pfd{fd, POLLIN, 0};
        int r = ::poll(&pfd, 1, 200);
        if (r < 0) break;
        if (r == 0) continue;
        ssize_t k = ::recv(fd, buf, sizeof(buf), 0);
        if (k <= 0) break;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = ws_clients_.find(client_id);
    if (it != ws_clients_.end() && it->second == fd) ws_clients_.erase(it);
    ::close(fd);
}

void StubServer::push_script_events(const std::string& client_id,
                                    const std::string& prompt_id) {
    int fd = -1;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = ws_clients_.find(client_id);
        if (it == ws_clients_.end()) return;
        fd = it->second;
    }

    auto message = [&](const std::string& type, ordered_json data) {
        data["prompt_id"] = prompt_id;
        return ordered_json{{"type", type}, {"data", data}}.dump();
    };

    send_ws_text(fd, message("executing", ordered_json{{"node", "1"}}));
    for (int i = 0; i < script_.progress_steps; ++i) {
        send_ws_text(fd, message("progress", ordered_json{{"value", i + 1},
                                                          {"max", script_.progress_steps}}));
    }
    switch (script_.mode) {
        case StubScript::Mode::Complete:
            send_ws_text(fd, message("executed",
                                     ordered_json{{"node", script_.output_node}}));
            break;
        case StubScript::Mode::NodeError:
            send_ws_text(fd, message("execution_error",
                                     ordered_json{{"node_id", script_.error_node},
                                                  {"exception_message",
                                                   "stubbed failure"}}));
            break;
        case StubScript::Mode::Timeout:
            break;  // never send a terminal message
    }
}

}  // namespace atelier
