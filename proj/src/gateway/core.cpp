// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/gateway/core.hpp"

#include "sketchwatch/common/error.hpp"

namespace sketchwatch::gateway {

namespace {

const nlohmann::json &field(const nlohmann::json &payload, const char *name)
{
    auto it = payload.find(name);
    if (it == payload.end())
        throw Error(Errc::malformed, std::string("payload needs '") + name + "'");
    return *it;
}

} // namespace

GatewayCore::GatewayCore(gamecore::SessionRegistry &registry, alerts::AlertEngine &alerts, GatewayConfig cfg,
                         GatewayHooks hooks)
    : registry_(registry), alerts_(alerts), cfg_(cfg), hooks_(std::move(hooks)), debouncer_(cfg.relay)
{
}

ConnId GatewayCore::connect()
{
    std::lock_guard lock(mutex_);
    const ConnId id = next_conn_++;
    conns_[id];
    return id;
}

std::optional<std::string> GatewayCore::session_of(ConnId conn) const
{
    std::lock_guard lock(mutex_);
    auto it = conns_.find(conn);
    if (it == conns_.end() || it->second.session_id.empty())
        return std::nullopt;
    return it->second.session_id;
}

std::size_t GatewayCore::connections() const
{
    std::lock_guard lock(mutex_);
    return conns_.size();
}

Outbound GatewayCore::to(ConnId conn, MessageType type, const std::string &session_id, nlohmann::json payload) const
{
    Outbound o;
    o.conn = conn;
    o.msg.type = type;
    o.msg.session_id = session_id;
    o.msg.payload = std::move(payload);
    return o;
}

ConnId GatewayCore::counterpart(const std::string &session_id, ConnId conn) const
{
    auto it = bindings_.find(session_id);
    if (it == bindings_.end())
        return 0;
    return it->second.drawer == conn ? it->second.guesser : it->second.drawer;
}

std::vector<Outbound> GatewayCore::handle_raw(ConnId conn, std::string_view text, std::int64_t now_ms)
{
    WireMessage msg;
    try {
        msg = parse_message(text);
    } catch (const Error &e) {
        return {{conn, error_message(to_string(e.code()), e.what())}};
    }
    return handle_message(conn, msg, now_ms);
}

std::vector<Outbound> GatewayCore::handle_message(ConnId conn, const WireMessage &msg, std::int64_t now_ms)
{
    std::lock_guard lock(mutex_);
    auto it = conns_.find(conn);
    if (it == conns_.end())
        return {};
    Conn &c = it->second;
    if (c.last_seq && msg.seq <= *c.last_seq)
        return {{conn, error_message("bad_seq", "seq must increase on every message", msg.seq)}};
    c.last_seq = msg.seq;
    try {
        return dispatch(conn, c, msg, now_ms);
    } catch (const Error &e) {
        return {{conn, error_message(to_string(e.code()), e.what(), msg.seq)}};
    } catch (const nlohmann::json::exception &e) {
        return {{conn, error_message("malformed", e.what(), msg.seq)}};
    } catch (const std::exception &e) {
        return {{conn, error_message("malformed", e.what(), msg.seq)}};
    }
}

std::vector<Outbound> GatewayCore::dispatch(ConnId conn, Conn &c, const WireMessage &msg, std::int64_t now_ms)
{
    if (server_only(msg.type))
        throw Error(Errc::malformed, std::string(to_string(msg.type)) + " is sent by the server only");
    if (msg.type == MessageType::Join)
        return join(conn, c, msg, now_ms);
    if (c.session_id.empty())
        throw Error(c.waiting ? Errc::not_active : Errc::unknown_session, "join a session first");
    if (!msg.session_id.empty() && msg.session_id != c.session_id)
        throw Error(Errc::unknown_session, "connection is not bound to session '" + msg.session_id + "'");
    const std::string sid = c.session_id;
    const ConnId other = counterpart(sid, conn);
    std::vector<Outbound> out;

    switch (msg.type) {
    case MessageType::StrokeAdd: {
        auto stroke = strokes::stroke_from_json(field(msg.payload, "stroke"));
        const auto stored = registry_.with_session(
            sid, [&](gamecore::GameSession &s) { return s.add_stroke(c.player, std::move(stroke), now_ms); });
        out.push_back(to(other, MessageType::StrokeAdd, sid, {{"stroke", strokes::to_json(stored)}}));
        if (auto seq = debouncer_.on_stroke(sid, now_ms))
            relay(sid, *seq);
        break;
    }
    case MessageType::Guess: {
        auto text = field(msg.payload, "text").get<std::string>();
        std::size_t index = 0;
        const auto outcome = registry_.with_session(sid, [&](gamecore::GameSession &s) {
            auto r = s.submit_guess(c.player, text, now_ms);
            index = s.guesses().size() - 1;
            return r;
        });
        out.push_back(to(other, MessageType::Guess, sid, {{"text", text}, {"guess_index", index}}));
        if (outcome == gamecore::GuessOutcome::Won) {
            auto end = end_game(sid, "won", now_ms);
            out.insert(out.end(), end.begin(), end.end());
        }
        break;
    }
    case MessageType::Feedback: {
        const auto kind = field(msg.payload, "kind").get<std::string>();
        if (kind == "confirm") {
            const auto index = field(msg.payload, "guess_index").get<std::size_t>();
            registry_.with_session(sid, [&](gamecore::GameSession &s) { s.confirm_guess(c.player, index, now_ms); });
            out.push_back(to(other, MessageType::Feedback, sid, {{"kind", "confirm"}, {"guess_index", index}}));
            auto end = end_game(sid, "won", now_ms);
            out.insert(out.end(), end.begin(), end.end());
            break;
        }
        const auto k = gamecore::feedback_kind_from_string(kind);
        std::optional<strokes::Point> point;
        if (msg.payload.contains("x") || msg.payload.contains("y"))
            point = strokes::Point{field(msg.payload, "x").get<double>(), field(msg.payload, "y").get<double>()};
        registry_.with_session(sid, [&](gamecore::GameSession &s) { s.record_feedback(c.player, k, point, now_ms); });
        nlohmann::json p{{"kind", kind}};
        if (point) {
            p["x"] = point->x;
            p["y"] = point->y;
        }
        if (msg.payload.contains("guess_index"))
            p["guess_index"] = msg.payload["guess_index"];
        out.push_back(to(other, MessageType::Feedback, sid, p));
        break;
    }
    case MessageType::FalseAlarm: {
        const auto role = registry_.with_session(sid, [&](gamecore::GameSession &s) { return s.role_of(c.player); });
        if (role != gamecore::Role::Drawer)
            throw Error(Errc::wrong_role, "only the drawer may dismiss an alert");
        const auto id = field(msg.payload, "alert_id").get<std::uint64_t>();
        alerts_.false_alarm(sid, id);
        for (ConnId to_conn : {conn, other})
            out.push_back(to(to_conn, MessageType::FalseAlarm, sid, {{"alert_id", id}}));
        break;
    }
    case MessageType::ViolationFlag: {
        const auto role = registry_.with_session(sid, [&](gamecore::GameSession &s) {
            if (s.terminal())
                throw Error(Errc::not_active, "session has ended");
            return s.role_of(c.player);
        });
        if (role != gamecore::Role::Guesser)
            throw Error(Errc::wrong_role, "only the guesser may flag a violation");
        auto flag = alerts_.guesser_flag(sid, now_ms);
        if (flag.manual) {
            const auto payload = flag.manual->to_json();
            registry_.with_session(sid, [&](gamecore::GameSession &s) { s.record_alert(payload, now_ms); });
            for (ConnId to_conn : {other, conn})
                out.push_back(to(to_conn, MessageType::Alert, sid, payload));
        } else {
            out.push_back(to(conn, MessageType::ViolationFlag, sid, {{"corroborated", true}}));
        }
        break;
    }
    default: throw Error(Errc::unknown_type, "unsupported message type");
    }
    // The counterpart may be gone already; drop messages addressed to nobody.
    std::erase_if(out, [](const Outbound &o) { return o.conn == 0; });
    return out;
}

std::vector<Outbound> GatewayCore::join(ConnId conn, Conn &c, const WireMessage &msg, std::int64_t now_ms)
{
    if (c.joined)
        throw Error(Errc::already_joined, "connection already joined");
    const auto v = msg.payload.find("v");
    if (v == msg.payload.end() || !v->is_number_integer() || v->get<int>() != kProtocolVersion)
        throw Error(Errc::malformed, "Join needs protocol version v=1");
    if (!msg.session_id.empty())
        throw Error(Errc::unknown_session, "joining a named session is not supported");
    std::string player = "p" + std::to_string(conn);
    if (auto p = msg.payload.find("player"); p != msg.payload.end()) {
        if (!p->is_string() || p->get_ref<const std::string &>().empty())
            throw Error(Errc::malformed, "'player' must be a non-empty string");
        player = p->get<std::string>();
    }
    if (by_player_.count(player))
        throw Error(Errc::already_joined, "player '" + player + "' is already connected");

    auto pairing = lobby_.join(player);
    c.player = player;
    c.joined = true;
    by_player_[player] = conn;
    if (!pairing) {
        c.waiting = true;
        return {to(conn, MessageType::RoleAssign, "", {{"role", "waiting"}, {"player", player}})};
    }
    const ConnId d = by_player_.at(pairing->drawer), g = by_player_.at(pairing->guesser);
    std::string sid;
    try {
        sid = registry_.create(pairing->drawer, pairing->guesser, cfg_.session, now_ms);
    } catch (const Error &e) {
        std::vector<Outbound> out;
        for (ConnId x : {d, g}) {
            auto &xc = conns_.at(x);
            by_player_.erase(xc.player);
            xc.joined = xc.waiting = false;
            out.push_back({x, error_message(to_string(e.code()), e.what())});
        }
        return out;
    }
    alerts_.open_session(sid);
    bindings_[sid] = {d, g};
    std::string target;
    registry_.with_session(sid, [&](gamecore::GameSession &s) { target = s.target(); });
    for (ConnId x : {d, g}) {
        auto &xc = conns_.at(x);
        xc.session_id = sid;
        xc.waiting = false;
    }
    if (hooks_.on_session_start)
        hooks_.on_session_start(sid);
    const nlohmann::json common{{"time_limit_ms", cfg_.session.time_limit_ms}, {"started_at_ms", now_ms}};
    auto dp = common, gp = common;
    dp["role"] = "drawer";
    dp["phrase"] = target;
    dp["player"] = pairing->drawer;
    gp["role"] = "guesser";
    gp["player"] = pairing->guesser;
    return {to(d, MessageType::RoleAssign, sid, dp), to(g, MessageType::RoleAssign, sid, gp)};
}

void GatewayCore::relay(const std::string &session_id, std::uint64_t seq)
{
    if (!hooks_.on_snapshot)
        return;
    strokes::CanvasSnapshot snap;
    snap.session_id = session_id;
    snap.snapshot_seq = seq;
    const bool active = registry_.with_session(session_id, [&](gamecore::GameSession &s) {
        if (s.state() != gamecore::SessionState::Active)
            return false;
        snap.strokes = s.strokes();
        return true;
    });
    if (active)
        hooks_.on_snapshot(snap);
}

std::vector<Outbound> GatewayCore::end_game(const std::string &session_id, std::string_view reason,
                                            std::int64_t now_ms)
{
    std::vector<Outbound> out;
    const auto outcome = alerts_.session_close(session_id);
    auto session = registry_.remove(session_id);
    debouncer_.forget(session_id);
    auto bit = bindings_.find(session_id);
    if (!session) {
        if (bit != bindings_.end())
            bindings_.erase(bit);
        return out;
    }
    session->attach_outcome(outcome.to_json());
    const auto record = session->to_record();
    nlohmann::json payload{{"reason", reason},
                           {"state", gamecore::to_string(session->state())},
                           {"target", session->target()},
                           {"elapsed_ms", session->elapsed_ms(now_ms)},
                           {"outcome", outcome.to_json()}};
    if (bit != bindings_.end()) {
        for (ConnId x : {bit->second.drawer, bit->second.guesser}) {
            auto cit = conns_.find(x);
            if (cit == conns_.end())
                continue;
            // Players go back to the lobby state and may Join again.
            by_player_.erase(cit->second.player);
            cit->second.session_id.clear();
            cit->second.joined = false;
            out.push_back(to(x, MessageType::GameEnd, session_id, payload));
        }
        bindings_.erase(bit);
    }
    if (hooks_.on_session_end)
        hooks_.on_session_end(session_id, record);
    return out;
}

std::vector<Outbound> GatewayCore::tick(std::int64_t now_ms)
{
    std::lock_guard lock(mutex_);
    std::vector<Outbound> out;
    for (const auto &sid : registry_.tick_all(now_ms)) {
        auto end = end_game(sid, "timed_out", now_ms);
        out.insert(out.end(), end.begin(), end.end());
    }
    for (const auto &due : debouncer_.poll(now_ms))
        relay(due.session_id, due.seq);
    return out;
}

std::vector<Outbound> GatewayCore::deliver_alerts(const std::vector<alerts::Alert> &alerts, std::int64_t now_ms)
{
    std::lock_guard lock(mutex_);
    std::vector<Outbound> out;
    for (const auto &a : alerts) {
        auto bit = bindings_.find(a.session_id);
        if (bit == bindings_.end())
            continue;
        const auto payload = a.to_json();
        bool logged = false;
        try {
            logged = registry_.with_session(a.session_id,
                                            [&](gamecore::GameSession &s) { return s.record_alert(payload, now_ms); });
        } catch (const Error &) {
        }
        if (!logged)
            continue;
        for (ConnId x : {bit->second.drawer, bit->second.guesser})
            out.push_back(to(x, MessageType::Alert, a.session_id, payload));
    }
    return out;
}

std::vector<Outbound> GatewayCore::disconnect(ConnId conn, std::int64_t now_ms)
{
    std::lock_guard lock(mutex_);
    auto it = conns_.find(conn);
    if (it == conns_.end())
        return {};
    const Conn c = it->second;
    std::vector<Outbound> out;
    if (!c.session_id.empty()) {
        try {
            registry_.with_session(c.session_id,
                                   [&](gamecore::GameSession &s) { s.end_on_disconnect(c.player, now_ms); });
        } catch (const Error &) {
        }
        out = end_game(c.session_id, "disconnect", now_ms);
        std::erase_if(out, [&](const Outbound &o) { return o.conn == conn; });
    } else if (c.waiting) {
        lobby_.leave(c.player);
    }
    if (!c.player.empty()) {
        auto p = by_player_.find(c.player);
        if (p != by_player_.end() && p->second == conn)
            by_player_.erase(p);
    }
    conns_.erase(conn);
    return out;
}

} // namespace sketchwatch::gateway
