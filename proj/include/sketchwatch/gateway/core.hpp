// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/alerts/alerts.hpp"
#include "sketchwatch/gamecore/registry.hpp"
#include "sketchwatch/gateway/protocol.hpp"
#include "sketchwatch/gateway/relay.hpp"

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace sketchwatch::gateway {

using ConnId = std::uint64_t;

struct Outbound {
    ConnId conn = 0;
    WireMessage msg;
};

struct GatewayConfig {
    RelayPolicy relay{};
    gamecore::SessionOptions session{};
};

/// Hooks into the rest of the service. All optional.
struct GatewayHooks {
    std::function<void(const strokes::CanvasSnapshot &)> on_snapshot;
    std::function<void(const std::string &session_id)> on_session_start;
    /// Final record, outcome attached, once a game ends.
    std::function<void(const std::string &session_id, const nlohmann::json &record)> on_session_end;
};

/// Transport-independent protocol handler. Keeps only connection to session
/// bindings; game state lives in the registry and alert state in the engine.
/// Public calls are serialized by one lock. Outbound messages carry seq 0; the
/// transport stamps per-connection sequence numbers when it sends them.
class GatewayCore {
public:
    GatewayCore(gamecore::SessionRegistry &registry, alerts::AlertEngine &alerts, GatewayConfig cfg = {},
                GatewayHooks hooks = {});

    ConnId connect();

    /// One frame body. Never throws; problems come back as Error messages.
    std::vector<Outbound> handle_raw(ConnId conn, std::string_view text, std::int64_t now_ms);
    std::vector<Outbound> handle_message(ConnId conn, const WireMessage &msg, std::int64_t now_ms);

    /// Time limits and deferred relays.
    std::vector<Outbound> tick(std::int64_t now_ms);

    /// Logs each alert in its session record and sends it to both players.
    std::vector<Outbound> deliver_alerts(const std::vector<alerts::Alert> &alerts, std::int64_t now_ms);

    /// Ends the player's game (TimedOut, noted in the log) and drops the connection.
    std::vector<Outbound> disconnect(ConnId conn, std::int64_t now_ms);

    std::optional<std::string> session_of(ConnId conn) const;
    std::size_t connections() const;
    const GatewayConfig &config() const { return cfg_; }

private:
    struct Conn {
        std::string player;
        std::optional<std::uint64_t> last_seq;
        std::string session_id;
        bool joined = false;
        bool waiting = false;
    };
    struct Binding {
        ConnId drawer = 0;
        ConnId guesser = 0;
    };

    std::vector<Outbound> dispatch(ConnId conn, Conn &c, const WireMessage &msg, std::int64_t now_ms);
    std::vector<Outbound> join(ConnId conn, Conn &c, const WireMessage &msg, std::int64_t now_ms);
    std::vector<Outbound> end_game(const std::string &session_id, std::string_view reason, std::int64_t now_ms);
    void relay(const std::string &session_id, std::uint64_t seq);
    Outbound to(ConnId conn, MessageType type, const std::string &session_id, nlohmann::json payload) const;
    ConnId counterpart(const std::string &session_id, ConnId conn) const;

    gamecore::SessionRegistry &registry_;
    alerts::AlertEngine &alerts_;
    GatewayConfig cfg_;
    GatewayHooks hooks_;
    gamecore::Matchmaker lobby_;
    RelayDebouncer debouncer_;

    mutable std::mutex mutex_;
    ConnId next_conn_ = 1;
    std::map<ConnId, Conn> conns_;
    std::map<std::string, ConnId> by_player_;
    std::map<std::string, Binding> bindings_;
};

} // namespace sketchwatch::gateway
