#include "atelier/ws.hpp"

#include "atelier/util.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <cerrno>
#include <cstring>
#include <random>
#include <vector>

namespace atelier {

namespace {

constexpr const char* kWsGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

bool read_exact(int fd, unsigned char* buf, size_t n, int timeout_ms) {
    size_t got = 0;
    while (got < n) {
        pollfd pfd{fd, POLLIN, 0};
        int r = ::poll(&pfd, 1, timeout_ms);
        if (r <= 0) return false;
        ssize_t k = ::recv(fd, buf + got, n - got, 0);
        if (k <= 0) return false;
        got += static_cast<size_t>(k);
    }
    return true;
}

bool write_all(int fd, const unsigned char* buf, size_t n) {
    size_t sent = 0;
    while (sent < n) {
        ssize_t k = ::send(fd, buf + sent, n - sent, MSG_NOSIGNAL);
        if (k <= 0) return false;
        sent += static_cast<size_t>(k);
    }
    return true;
}

std::string sha1_base64(const std::string& input) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(input.data(), input.size(), digest, &len, EVP_sha1(), nullptr);
    return base64_encode(digest, len);
}

void send_masked_frame(int fd, uint8_t opcode, const std::string& payload) {
    std::vector<unsigned char> frame;
    frame.push_back(0x80 | opcode);
    unsigned char mask[4];
    std::random_device rd;
    for (unsigned char& m : mask) m = static_cast<unsigned char>(rd());
    size_t n = payload.size();
    if (n < 126) {
        frame.push_back(static_cast<unsigned char>(0x80 | n));
    } else if (n < 65536) {
        frame.push_back(0x80 | 126);
        frame.push_back(static_cast<unsigned char>(n >> 8));
        frame.push_back(static_cast<unsigned char>(n & 0xff));
    } else {
        frame.push_back(0x80 | 127);
        for (int i = 7; i >= 0; --i) {
            frame.push_back(static_cast<unsigned char>((n >> (8 * i)) & 0xff));
        }
    }
    frame.insert(frame.end(), mask, mask + 4);
    for (size_t i = 0; i < n; ++i) {
        frame.push_back(static_cast<unsigned char>(payload[i]) ^ mask[i % 4]);
    }
    write_all(fd, frame.data(), frame.size());
}

}  // namespace

WsClient::~WsClient() { close(); }

WsClient::WsClient(WsClient&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

WsClient& WsClient::operator=(WsClient&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

void WsClient::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

std::unique_ptr<WsClient> WsClient::connect(const std::string& host, int port,
                                            const std::string& path,
                                            int timeout_ms, std::string* error,
                                            bool* refused) {
    if (refused) *refused = false;

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) {
        if (error) *error = "cannot resolve host: " + host;
        if (refused) *refused = true;
        return nullptr;
    }

    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    freeaddrinfo(res);
    if (fd < 0) {
        if (error) *error = "connection refused: " + host + ":" + std::to_string(port);
        if (refused) *refused = true;
        return nullptr;
    }

    unsigned char key_bytes[16];
    std::random_device rd;
    for (unsigned char& b : key_bytes) b = static_cast<unsigned char>(rd());
    std::string key = base64_encode(key_bytes, sizeof(key_bytes));

    std::string request = "GET " + path + " HTTP/1.1\r\n" +
                          "Host: " + host + ":" + std::to_string(port) + "\r\n" +
                          "Upgrade: websocket\r\n" +
                          "Connection: Upgrade\r\n" +
                          "Sec-WebSocket-Key: " + key + "\r\n" +
                          "Sec-WebSocket-Version: 13\r\n\r\n";
    if (!write_all(fd, reinterpret_cast<const unsigned char*>(request.data()),
                   request.size())) {
        ::close(fd);
        if (error) *error = "failed to send upgrade request";
        return nullptr;
    }

    std::string response;
    unsigned char c;
    while (response.find("\r\n\r\n") == std::string::npos) {
        if (!read_exact(fd, &c, 1, timeout_ms) || response.size() > 16384) {
            ::close(fd);
            if (error) *error = "handshake response incomplete";
            return nullptr;
        }
        response += static_cast<char>(c);
    }
    if (response.find(" 101 ") == std::string::npos) {
        ::close(fd);
        if (error) *error = "handshake rejected: " + response.substr(0, response.find("\r\n"));
        return nullptr;
    }
    std::string expected = sha1_base64(key + kWsGuid);
    if (response.find(expected) == std::string::npos) {
        ::close(fd);
        if (error) *error = "handshake accept key mismatch";
        return nullptr;
    }

    return std::unique_ptr<WsClient>(new WsClient(fd));
}

std::optional<std::string> WsClient::read_text(int timeout_ms) {
    while (fd_ >= 0) {
        unsigned char header[2];
        if (!read_exact(fd_, header, 2, timeout_ms)) return std::nullopt;
        uint8_t opcode = header[0] & 0x0f;
        bool masked = header[1] & 0x80;
        uint64_t len = header[1] & 0x7f;
        if (len == 126) {
            unsigned char ext[2];
            if (!read_exact(fd_, ext, 2, timeout_ms)) return std::nullopt;
            len = (static_cast<uint64_t>(ext[0]) << 8) | ext[1];
        } else if (len == 127) {
            unsigned char ext[8];
            if (!read_exact(fd_, ext, 8, timeout_ms)) return std::nullopt;
            len = 0;
            for (unsigned char b : ext) len = (len << 8) | b;
        }
        unsigned char mask[4] = {0, 0, 0, 0};
        if (masked && !read_exact(fd_, mask, 4, timeout_ms)) return std::nullopt;
        std::string payload(len, '\0');
        if (len &&
            !read_exact(fd_, reinterpret_cast<unsigned char*>(payload.data()), len,
                        timeout_ms)) {
            return std::nullopt;
        }
        if (masked) {
            for (uint64_t i = 0; i < len; ++i) payload[i] ^= mask[i % 4];
        }

        if (opcode == 0x1) return payload;
        if (opcode == 0x9) {  // ping
            send_masked_frame(fd_, 0xA, payload);
            continue;
        }
        if (opcode == 0x8) {  // close
            close();
            return std::nullopt;
        }
        // binary/continuation frames are ignored
    }
    return std::nullopt;
}

}  // namespace atelier
