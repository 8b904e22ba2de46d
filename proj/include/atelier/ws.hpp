#pragma once

#include <memory>
#include <optional>
#include <string>

namespace atelier {

// Minimal RFC 6455 client: text frames, ping/pong, close. Enough to consume
// a generation server's progress stream.
class WsClient {
public:
    ~WsClient();
    WsClient(WsClient&&) noexcept;
    WsClient& operator=(WsClient&&) noexcept;

    // Returns nullptr and fills *error on failure. *refused is set when the
    // TCP connection itself was refused (server unreachable) as opposed to a
    // failed upgrade handshake.
    static std::unique_ptr<WsClient> connect(const std::string& host, int port,
                                             const std::string& path,
                                             int timeout_ms, std::string* error,
                                             bool* refused = nullptr);

    // Next text payload; nullopt on timeout or connection close.
    std::optional<std::string> read_text(int timeout_ms);

    void close();

private:
    explicit WsClient(int fd) : fd_(fd) {}
    int fd_ = -1;
};

}  // namespace atelier
