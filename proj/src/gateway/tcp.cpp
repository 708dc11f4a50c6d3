// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/gateway/tcp.hpp"

#include "sketchwatch/common/error.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace sketchwatch::gateway {

namespace {

bool write_all(int fd, std::string_view data)
{
    while (!data.empty()) {
        const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
            return false;
        data.remove_prefix(static_cast<std::size_t>(n));
    }
    return true;
}

void set_nodelay(int fd)
{
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

} // namespace

std::int64_t steady_ms()
{
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

TcpServer::TcpServer(GatewayCore &core, TcpOptions opts) : core_(core), opts_(std::move(opts)) {}

TcpServer::~TcpServer() { stop(); }

void TcpServer::start()
{
    if (running_)
        return;
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0)
        throw Error(Errc::io, std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(opts_.port);
    if (::inet_pton(AF_INET, opts_.host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw Error(Errc::invalid_argument, "bad listen address '" + opts_.host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr *>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 64) < 0) {
        const std::string why = std::strerror(errno);
        ::close(listen_fd_);
        throw Error(Errc::io, "cannot listen on " + opts_.host + ":" + std::to_string(opts_.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr *>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    ticker_ = std::thread([this] { tick_loop(); });
}

void TcpServer::stop()
{
    if (!running_.exchange(false))
        return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    stop_cv_.notify_all();
    acceptor_.join();
    ticker_.join();
    std::map<ConnId, std::shared_ptr<Peer>> peers;
    {
        std::lock_guard lock(peers_mutex_);
        peers.swap(peers_);
    }
    for (auto &[id, p] : peers)
        ::shutdown(p->fd, SHUT_RDWR);
    for (auto &[id, p] : peers) {
        if (p->reader.joinable())
            p->reader.join();
        ::close(p->fd);
    }
}

void TcpServer::accept_loop()
{
    while (running_) {
        pollfd pfd{listen_fd_, POLLIN, 0};
        const int r = ::poll(&pfd, 1, 100);
        if (r <= 0 || !running_) {
            reap();
            continue;
        }
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0)
            continue;
        set_nodelay(fd);
        auto peer = std::make_shared<Peer>();
        peer->fd = fd;
        const ConnId id = core_.connect();
        {
            std::lock_guard lock(peers_mutex_);
            peers_[id] = peer;
        }
        peer->reader = std::thread([this, id, peer] { read_loop(id, peer); });
        reap();
    }
}

void TcpServer::reap()
{
    std::vector<std::shared_ptr<Peer>> dead;
    {
        std::lock_guard lock(peers_mutex_);
        for (auto it = peers_.begin(); it != peers_.end();) {
            if (it->second->done) {
                dead.push_back(it->second);
                it = peers_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (auto &p : dead) {
        if (p->reader.joinable())
            p->reader.join();
        ::close(p->fd);
    }
}

void TcpServer::read_loop(ConnId id, std::shared_ptr<Peer> peer)
{
    FrameDecoder decoder(opts_.max_frame);
    char buf[8192];
    while (running_) {
        const ssize_t n = ::recv(peer->fd, buf, sizeof buf, 0);
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
            break;
        std::vector<std::string> frames;
        try {
            frames = decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
        } catch (const Error &e) {
            send({{id, error_message("malformed", e.what())}});
            break;
        }
        for (const auto &f : frames)
            send(core_.handle_raw(id, f, steady_ms()));
    }
    send(core_.disconnect(id, steady_ms()));
    ::shutdown(peer->fd, SHUT_RDWR);
    peer->done = true;
}

void TcpServer::tick_loop()
{
    std::unique_lock lock(stop_mutex_);
    while (running_) {
        lock.unlock();
        send(core_.tick(steady_ms()));
        lock.lock();
        stop_cv_.wait_for(lock, opts_.tick, [&] { return !running_; });
    }
}

void TcpServer::send(const std::vector<Outbound> &out)
{
    for (const auto &o : out) {
        std::shared_ptr<Peer> peer;
        {
            std::lock_guard lock(peers_mutex_);
            auto it = peers_.find(o.conn);
            if (it == peers_.end())
                continue;
            peer = it->second;
        }
        std::lock_guard wlock(peer->write_mutex);
        WireMessage m = o.msg;
        m.seq = ++peer->out_seq;
        write_all(peer->fd, encode_frame(m.dump()));
    }
}

TcpClient::TcpClient(const std::string &host, std::uint16_t port)
{
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo *res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
        throw Error(Errc::io, "cannot resolve " + host);
    fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    const int rc = fd_ < 0 ? -1 : ::connect(fd_, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc < 0) {
        const std::string why = std::strerror(errno);
        if (fd_ >= 0)
            ::close(fd_);
        throw Error(Errc::io, "cannot connect to " + host + ":" + std::to_string(port) + ": " + why);
    }
    set_nodelay(fd_);
}

TcpClient::~TcpClient() { close(); }

void TcpClient::close()
{
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
        ::close(fd_);
        fd_ = -1;
    }
    closed_ = true;
}

void TcpClient::send(WireMessage msg, bool keep_seq)
{
    if (!keep_seq)
        msg.seq = ++seq_;
    send_raw(encode_frame(msg.dump()));
}

void TcpClient::send_raw(std::string_view bytes)
{
    if (fd_ < 0 || !write_all(fd_, bytes))
        throw Error(Errc::io, "connection closed");
}

std::optional<WireMessage> TcpClient::receive(std::chrono::milliseconds timeout)
{
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (inbox_.empty() && fd_ >= 0) {
        const auto left =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0)
            break;
        pollfd pfd{fd_, POLLIN, 0};
        if (::poll(&pfd, 1, static_cast<int>(left.count())) <= 0)
            continue;
        char buf[8192];
        const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
        if (n <= 0) {
            closed_ = true;
            break;
        }
        for (auto &f : decoder_.feed(std::string_view(buf, static_cast<std::size_t>(n))))
            inbox_.push_back(parse_message(std::string_view(f)));
    }
    if (inbox_.empty())
        return std::nullopt;
    auto m = std::move(inbox_.front());
    inbox_.pop_front();
    return m;
}

std::optional<WireMessage> TcpClient::receive_type(MessageType type, std::chrono::milliseconds timeout)
{
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        const auto left =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0)
            return std::nullopt;
        auto m = receive(left);
        if (!m)
            return std::nullopt;
        if (m->type == type)
            return m;
    }
}

} // namespace sketchwatch::gateway
