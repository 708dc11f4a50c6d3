// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/gateway/core.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace sketchwatch::gateway {

/// Milliseconds on the steady clock; what the server passes to GatewayCore.
std::int64_t steady_ms();

struct TcpOptions {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0; // 0 picks a free port
    std::chrono::milliseconds tick{20};
    std::size_t max_frame = 1 << 20;
};

/// Framed JSON over TCP, one reader thread per connection plus one ticker thread
/// that drives time limits and deferred relays.
class TcpServer {
public:
    TcpServer(GatewayCore &core, TcpOptions opts = {});
    ~TcpServer();
    TcpServer(const TcpServer &) = delete;
    TcpServer &operator=(const TcpServer &) = delete;

    /// Binds and starts serving. Throws Error(io).
    void start();
    void stop();
    std::uint16_t port() const { return port_; }

    /// Sends core output. Safe from any thread; stamps per-connection seq.
    void send(const std::vector<Outbound> &out);

private:
    struct Peer {
        int fd = -1;
        std::mutex write_mutex;
        std::uint64_t out_seq = 0;
        std::thread reader;
        std::atomic<bool> done{false};
    };

    void accept_loop();
    void read_loop(ConnId id, std::shared_ptr<Peer> peer);
    void tick_loop();
    void reap();

    GatewayCore &core_;
    TcpOptions opts_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::thread ticker_;
    std::mutex peers_mutex_;
    std::map<ConnId, std::shared_ptr<Peer>> peers_;
    std::mutex stop_mutex_;
    std::condition_variable stop_cv_;
};

/// Blocking client speaking the same framing. Used by tests and tools.
class TcpClient {
public:
    /// Throws Error(io) when the connection fails.
    TcpClient(const std::string &host, std::uint16_t port);
    ~TcpClient();
    TcpClient(const TcpClient &) = delete;
    TcpClient &operator=(const TcpClient &) = delete;

    /// Fills in the next seq unless `keep_seq`.
    void send(WireMessage msg, bool keep_seq = false);
    void send_raw(std::string_view bytes);
    /// Next message, or nullopt on timeout or closed connection.
    std::optional<WireMessage> receive(std::chrono::milliseconds timeout);
    /// Skips messages until one of `type` arrives.
    std::optional<WireMessage> receive_type(MessageType type, std::chrono::milliseconds timeout);
    bool closed() const { return closed_; }
    void close();

private:
    int fd_ = -1;
    std::uint64_t seq_ = 0;
    FrameDecoder decoder_;
    std::deque<WireMessage> inbox_;
    bool closed_ = false;
};

} // namespace sketchwatch::gateway
