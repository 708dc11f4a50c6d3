// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/common/error.hpp"
#include "sketchwatch/gateway/core.hpp"
#include "sketchwatch/gateway/tcp.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

using namespace sketchwatch;
using namespace sketchwatch::gateway;
using nlohmann::json;

namespace {

json stroke_json(std::int64_t id, double x0 = 10, double y0 = 10)
{
    return {{"id", id}, {"kind", "draw"}, {"t_ms", 0}, {"pts", {{x0, y0}, {x0 + 30, y0 + 5}, {x0 + 60, y0}}}};
}

WireMessage msg(MessageType t, std::uint64_t seq, json payload = json::object(), std::string sid = "")
{
    WireMessage m;
    m.type = t;
    m.seq = seq;
    m.payload = std::move(payload);
    m.session_id = std::move(sid);
    return m;
}

std::vector<Outbound> for_conn(const std::vector<Outbound> &out, ConnId c)
{
    std::vector<Outbound> r;
    std::copy_if(out.begin(), out.end(), std::back_inserter(r), [&](const Outbound &o) { return o.conn == c; });
    return r;
}

std::string error_code(const std::vector<Outbound> &out)
{
    REQUIRE(out.size() == 1);
    REQUIRE(out[0].msg.type == MessageType::Error);
    return out[0].msg.payload.at("code").get<std::string>();
}

struct Harness {
    gamecore::SessionRegistry registry{4};
    alerts::AlertEngine alerts;
    std::vector<strokes::CanvasSnapshot> snapshots;
    std::vector<std::pair<std::string, json>> ended;
    GatewayCore core;
    std::uint64_t seq[16] = {};
    ConnId drawer = 0, guesser = 0;
    std::string sid;

    explicit Harness(std::int64_t interval_ms = 1000, std::int64_t limit_ms = 120'000)
        : core(registry, alerts, config(interval_ms, limit_ms),
               {[this](const strokes::CanvasSnapshot &s) { snapshots.push_back(s); }, {},
                [this](const std::string &id, const json &rec) { ended.emplace_back(id, rec); }})
    {
    }

    static GatewayConfig config(std::int64_t interval_ms, std::int64_t limit_ms)
    {
        GatewayConfig c;
        c.relay.min_interval_ms = interval_ms;
        c.session.time_limit_ms = limit_ms;
        return c;
    }

    std::vector<Outbound> send(ConnId c, MessageType t, json payload = json::object(), std::int64_t now = 0)
    {
        return core.handle_message(c, msg(t, ++seq[c], std::move(payload)), now);
    }

    void pair(std::int64_t now = 0)
    {
        const ConnId a = core.connect(), b = core.connect();
        auto wa = send(a, MessageType::Join, {{"v", 1}, {"player", "alice"}}, now);
        REQUIRE(wa.size() == 1);
        CHECK(wa[0].msg.payload["role"] == "waiting");
        auto out = send(b, MessageType::Join, {{"v", 1}, {"player", "bob"}}, now);
        REQUIRE(out.size() == 2);
        for (const auto &o : out) {
            REQUIRE(o.msg.type == MessageType::RoleAssign);
            (o.msg.payload["role"] == "drawer" ? drawer : guesser) = o.conn;
            sid = o.msg.session_id;
        }
        REQUIRE(drawer != 0);
        REQUIRE(guesser != 0);
    }

    std::string target()
    {
        return registry.with_session(sid, [](gamecore::GameSession &s) { return s.target(); });
    }
};

// Reference debounce: replays stroke times on a simulated clock with polls at
// every millisecond and returns (emit time, number of strokes covered).
std::vector<std::pair<std::int64_t, std::size_t>> debounce_oracle(const std::vector<std::int64_t> &strokes,
                                                                  std::int64_t interval, std::int64_t horizon)
{
    std::vector<std::pair<std::int64_t, std::size_t>> out;
    std::optional<std::int64_t> last;
    bool pending = false;
    std::size_t seen = 0, k = 0;
    for (std::int64_t t = 0; t <= horizon; ++t) {
        while (k < strokes.size() && strokes[k] == t) {
            ++seen;
            ++k;
            if (!last || t - *last >= interval) {
                out.emplace_back(t, seen);
                last = t;
                pending = false;
            } else {
                pending = true;
            }
        }
        if (pending && t - *last >= interval) {
            out.emplace_back(t, seen);
            last = t;
            pending = false;
        }
    }
    return out;
}

} // namespace

TEST_CASE("message types round trip and unknown types are rejected")
{
    for (int i = 0; i <= static_cast<int>(MessageType::Error); ++i) {
        const auto t = static_cast<MessageType>(i);
        CHECK(message_type_from_string(to_string(t)) == t);
    }
    try {
        parse_message(std::string_view(R"({"type":"Teleport","session_id":"","seq":1,"payload":{}})"));
        FAIL("expected throw");
    } catch (const Error &e) {
        CHECK(e.code() == Errc::unknown_type);
    }
    for (const char *bad : {"", "[]", "{", R"({"type":"Join"})", R"({"type":"Join","seq":-1,"payload":{}})",
                            R"({"type":7,"seq":1,"payload":{}})", R"({"type":"Join","seq":1,"payload":3})"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_message(std::string_view(bad)), Error);
    }
    const auto m = msg(MessageType::Guess, 9, {{"text", "bee"}}, "s1");
    const auto back = parse_message(std::string_view(m.dump()));
    CHECK(back.type == m.type);
    CHECK(back.seq == 9);
    CHECK(back.session_id == "s1");
    CHECK(back.payload == m.payload);
}

TEST_CASE("frames survive arbitrary chunking")
{
    std::mt19937_64 rng(3);
    std::vector<std::string> bodies;
    std::string stream;
    for (int i = 0; i < 50; ++i) {
        std::string b(rng() % 300, 'x');
        for (auto &ch : b)
            ch = static_cast<char>('a' + rng() % 26);
        bodies.push_back(b);
        stream += encode_frame(b);
    }
    FrameDecoder dec;
    std::vector<std::string> got;
    for (std::size_t i = 0; i < stream.size();) {
        const std::size_t n = std::min<std::size_t>(1 + rng() % 40, stream.size() - i);
        for (auto &f : dec.feed(std::string_view(stream).substr(i, n)))
            got.push_back(f);
        i += n;
    }
    CHECK(got == bodies);
    CHECK(dec.buffered() == 0);

    FrameDecoder small(16);
    CHECK_THROWS_AS(small.feed(encode_frame(std::string(17, 'a'))), Error);
    const auto hdr = encode_frame("abc");
    CHECK(hdr.substr(0, 4) == std::string("\0\0\0\3", 4));
}

TEST_CASE("join pairs two players and assigns roles")
{
    Harness h;
    h.pair(1000);
    auto snap = h.registry.snapshot(h.sid);
    REQUIRE(snap);
    CHECK(snap->state() == gamecore::SessionState::Active);
    CHECK(h.core.session_of(h.drawer) == h.sid);
    CHECK(h.core.session_of(h.guesser) == h.sid);

    // Version is mandatory.
    const ConnId c = h.core.connect();
    CHECK(error_code(h.send(c, MessageType::Join, json::object())) == "malformed");
    CHECK(error_code(h.send(c, MessageType::Join, {{"v", 2}})) == "malformed");
    // Joined players cannot join again.
    CHECK(error_code(h.send(h.drawer, MessageType::Join, {{"v", 1}})) == "already_joined");
    // Named sessions are not joinable.
    CHECK(error_code(h.core.handle_message(c, msg(MessageType::Join, ++h.seq[c], {{"v", 1}}, "nope"), 0)) ==
          "unknown_session");
}

TEST_CASE("drawer phrase goes to the drawer only")
{
    gamecore::SessionRegistry reg;
    alerts::AlertEngine eng;
    GatewayCore core(reg, eng);
    const ConnId a = core.connect(), b = core.connect();
    core.handle_message(a, msg(MessageType::Join, 1, {{"v", 1}}), 0);
    auto out = core.handle_message(b, msg(MessageType::Join, 1, {{"v", 1}}), 0);
    REQUIRE(out.size() == 2);
    for (const auto &o : out) {
        CHECK(o.msg.payload.contains("phrase") == (o.msg.payload["role"] == "drawer"));
        CHECK(o.msg.payload["time_limit_ms"] == 120000);
    }
}

TEST_CASE("messages before joining and server-only types are errors")
{
    Harness h;
    const ConnId c = h.core.connect();
    CHECK(error_code(h.send(c, MessageType::Guess, {{"text", "x"}})) == "unknown_session");
    CHECK(error_code(h.send(c, MessageType::Alert, json::object())) == "malformed");
    h.send(c, MessageType::Join, {{"v", 1}});
    CHECK(error_code(h.send(c, MessageType::Guess, {{"text", "x"}})) == "not_active");
}

TEST_CASE("seq must strictly increase per connection")
{
    Harness h;
    h.pair();
    auto ok = h.core.handle_message(h.guesser, msg(MessageType::Guess, 50, {{"text", "zzz"}}), 10);
    CHECK(ok.size() == 1);
    for (std::uint64_t s : {50u, 49u, 1u}) {
        auto out = h.core.handle_message(h.guesser, msg(MessageType::Guess, s, {{"text", "zzz"}}), 10);
        CHECK(error_code(out) == "bad_seq");
        CHECK(out[0].msg.payload["ref_seq"] == s);
    }
    // Other connections keep their own counters.
    CHECK(h.core.handle_message(h.drawer, msg(MessageType::StrokeAdd, 1, {{"stroke", stroke_json(1)}}), 10).size() ==
          1);
}

TEST_CASE("stroke from the guesser is a wrong_role error")
{
    Harness h;
    h.pair();
    CHECK(error_code(h.send(h.guesser, MessageType::StrokeAdd, {{"stroke", stroke_json(1)}})) == "wrong_role");
    CHECK(error_code(h.send(h.drawer, MessageType::Guess, {{"text", "x"}})) == "wrong_role");
    CHECK(error_code(h.send(h.drawer, MessageType::ViolationFlag)) == "wrong_role");
    CHECK(error_code(h.send(h.guesser, MessageType::FalseAlarm, {{"alert_id", 1}})) == "wrong_role");
}

TEST_CASE("stroke is echoed to the guesser and relayed")
{
    Harness h;
    h.pair();
    auto out = h.send(h.drawer, MessageType::StrokeAdd, {{"stroke", stroke_json(1)}}, 200);
    REQUIRE(out.size() == 1);
    CHECK(out[0].conn == h.guesser);
    CHECK(out[0].msg.type == MessageType::StrokeAdd);
    CHECK(out[0].msg.session_id == h.sid);
    REQUIRE(h.snapshots.size() == 1);
    CHECK(h.snapshots[0].session_id == h.sid);
    CHECK(h.snapshots[0].strokes.size() == 1);
    CHECK(error_code(h.send(h.drawer, MessageType::StrokeAdd, {{"stroke", {{"id", 2}}}})) == "malformed");
}

TEST_CASE("guess is broadcast to the drawer")
{
    Harness h;
    h.pair();
    auto out = h.send(h.guesser, MessageType::Guess, {{"text", "bee"}}, 500);
    REQUIRE(out.size() == 1);
    CHECK(out[0].conn == h.drawer);
    CHECK(out[0].msg.type == MessageType::Guess);
    CHECK(out[0].msg.payload["text"] == "bee");
    CHECK(out[0].msg.payload["guess_index"] == 0);
}

TEST_CASE("drawer confirmation ends the game for both players")
{
    Harness h;
    h.pair();
    h.send(h.guesser, MessageType::Guess, {{"text", "wrong"}}, 100);
    h.send(h.guesser, MessageType::Guess, {{"text", h.target()}}, 200);
    CHECK(error_code(h.send(h.guesser, MessageType::Feedback, {{"kind", "confirm"}, {"guess_index", 1}})) ==
          "wrong_role");
    CHECK(error_code(h.send(h.drawer, MessageType::Feedback, {{"kind", "confirm"}, {"guess_index", 7}})) ==
          "not_found");
    auto out = h.send(h.drawer, MessageType::Feedback, {{"kind", "confirm"}, {"guess_index", 1}}, 300);
    auto ends = std::count_if(out.begin(), out.end(), [](auto &o) { return o.msg.type == MessageType::GameEnd; });
    CHECK(ends == 2);
    for (const auto &o : out)
        if (o.msg.type == MessageType::GameEnd) {
            CHECK(o.msg.payload["state"] == "won_by_guess");
            CHECK(o.msg.payload["outcome"].contains("tp"));
        }
    REQUIRE(h.ended.size() == 1);
    CHECK(h.ended[0].first == h.sid);
    CHECK(h.ended[0].second.contains("outcome"));
    CHECK_FALSE(h.registry.snapshot(h.sid));
    CHECK_FALSE(h.core.session_of(h.drawer));
    // Both may queue up again.
    CHECK(h.send(h.drawer, MessageType::Join, {{"v", 1}})[0].msg.payload["role"] == "waiting");
}

TEST_CASE("auto-confirm mode ends on an exact guess")
{
    gamecore::SessionRegistry reg;
    alerts::AlertEngine eng;
    GatewayConfig cfg;
    cfg.session.auto_confirm = true;
    GatewayCore core(reg, eng, cfg);
    const ConnId a = core.connect(), b = core.connect();
    core.handle_message(a, msg(MessageType::Join, 1, {{"v", 1}}), 0);
    auto out = core.handle_message(b, msg(MessageType::Join, 1, {{"v", 1}}), 0);
    ConnId g = 0;
    std::string sid;
    for (auto &o : out)
        if (o.msg.payload["role"] == "guesser") {
            g = o.conn;
            sid = o.msg.session_id;
        }
    const auto target = reg.with_session(sid, [](gamecore::GameSession &s) { return s.target(); });
    std::string upper = target;
    std::transform(upper.begin(), upper.end(), upper.begin(), ::toupper);
    auto res = core.handle_message(g, msg(MessageType::Guess, 2, {{"text", upper}}), 10);
    CHECK(std::count_if(res.begin(), res.end(), [](auto &o) { return o.msg.type == MessageType::GameEnd; }) == 2);
}

TEST_CASE("feedback is recorded and relayed")
{
    Harness h;
    h.pair();
    auto out = h.send(h.drawer, MessageType::Feedback, {{"kind", "ping"}, {"x", 12.5}, {"y", 40}}, 50);
    REQUIRE(out.size() == 1);
    CHECK(out[0].conn == h.guesser);
    CHECK(out[0].msg.payload["x"] == 12.5);
    CHECK(error_code(h.send(h.drawer, MessageType::Feedback, {{"kind", "wave"}})) == "malformed");
    auto s = h.registry.snapshot(h.sid);
    CHECK(s->feedback().size() == 1);
}

TEST_CASE("alerts reach both players and are logged")
{
    Harness h;
    h.pair();
    pipeline::DetectionResult r;
    r.session_id = h.sid;
    r.snapshot_seq = 1;
    r.boxes.push_back({100, 100, 40, 20, detector::Category::Text, 0.9});
    auto alerts = h.alerts.ingest(r, 1000);
    REQUIRE(alerts.size() == 1);
    auto out = h.core.deliver_alerts(alerts, 1000);
    REQUIRE(out.size() == 2);
    CHECK(out[0].msg.type == MessageType::Alert);
    CHECK(out[0].msg.payload["boxes"].size() == 1);
    const auto id = out[0].msg.payload["alert_id"].get<std::uint64_t>();

    // Drawer dismisses it; both sides hear about it and the ledger counts a FP.
    auto fa = h.send(h.drawer, MessageType::FalseAlarm, {{"alert_id", id}}, 1100);
    CHECK(fa.size() == 2);
    CHECK(error_code(h.send(h.drawer, MessageType::FalseAlarm, {{"alert_id", id}})) == "invalid_state");
    CHECK(error_code(h.send(h.drawer, MessageType::FalseAlarm, {{"alert_id", 999}})) == "not_found");

    // Nothing live now, so a guesser flag becomes a manual alert.
    auto flag = h.send(h.guesser, MessageType::ViolationFlag, json::object(), 1200);
    REQUIRE(flag.size() == 2);
    CHECK(flag[0].msg.type == MessageType::Alert);
    CHECK(flag[0].msg.payload["manual"] == true);

    auto rec = h.registry.snapshot(h.sid)->to_record();
    int logged = 0;
    for (const auto &e : rec["events"])
        logged += e.value("type", "") == "alert";
    CHECK(logged == 2);

    auto end = h.core.disconnect(h.guesser, 1300);
    REQUIRE(end.size() == 1);
    CHECK(end[0].conn == h.drawer);
    CHECK(end[0].msg.payload["outcome"] == json{{"tp", 0}, {"fp", 1}, {"fn", 1}});
    CHECK(h.alerts.ledger().totals().false_positive == 1);
}

TEST_CASE("flag with a live alert corroborates it")
{
    Harness h;
    h.pair();
    pipeline::DetectionResult r;
    r.session_id = h.sid;
    r.snapshot_seq = 1;
    r.boxes.push_back({100, 100, 40, 20, detector::Category::Text, 0.9});
    h.core.deliver_alerts(h.alerts.ingest(r, 10), 10);
    auto out = h.send(h.guesser, MessageType::ViolationFlag, json::object(), 20);
    REQUIRE(out.size() == 1);
    CHECK(out[0].conn == h.guesser);
    CHECK(out[0].msg.payload["corroborated"] == true);
}

TEST_CASE("disconnect ends the session as timed out and notes it")
{
    Harness h;
    h.pair();
    auto out = h.core.disconnect(h.drawer, 5000);
    REQUIRE(out.size() == 1);
    CHECK(out[0].conn == h.guesser);
    CHECK(out[0].msg.type == MessageType::GameEnd);
    CHECK(out[0].msg.payload["state"] == "timed_out");
    CHECK(out[0].msg.payload["reason"] == "disconnect");
    REQUIRE(h.ended.size() == 1);
    CHECK(h.ended[0].second.dump().find("disconnect") != std::string::npos);
    CHECK(h.core.connections() == 1);

    // A waiting player who leaves is removed from the lobby.
    Harness w;
    const ConnId c = w.core.connect();
    w.send(c, MessageType::Join, {{"v", 1}, {"player", "solo"}});
    CHECK(w.core.disconnect(c, 0).empty());
    const ConnId d = w.core.connect();
    CHECK(w.send(d, MessageType::Join, {{"v", 1}, {"player", "solo"}})[0].msg.payload["role"] == "waiting");
}

TEST_CASE("time limit ends the game from tick")
{
    Harness h(1000, 5000);
    h.pair(0);
    CHECK(h.core.tick(5000).empty());
    auto out = h.core.tick(5001);
    REQUIRE(out.size() == 2);
    CHECK(out.size() == 2);
    CHECK(out[0].msg.payload["reason"] == "timed_out");
    CHECK(h.ended.size() == 1);
}

TEST_CASE("capacity error reaches both players")
{
    gamecore::SessionRegistry reg(1);
    alerts::AlertEngine eng;
    GatewayCore core(reg, eng);
    std::vector<ConnId> c;
    for (int i = 0; i < 4; ++i)
        c.push_back(core.connect());
    core.handle_message(c[0], msg(MessageType::Join, 1, {{"v", 1}}), 0);
    core.handle_message(c[1], msg(MessageType::Join, 1, {{"v", 1}}), 0);
    core.handle_message(c[2], msg(MessageType::Join, 1, {{"v", 1}}), 0);
    auto out = core.handle_message(c[3], msg(MessageType::Join, 1, {{"v", 1}}), 0);
    REQUIRE(out.size() == 2);
    for (const auto &o : out) {
        CHECK(o.msg.type == MessageType::Error);
        CHECK(o.msg.payload["code"] == "capacity");
    }
    // They are free to try again.
    CHECK(core.handle_message(c[3], msg(MessageType::Join, 2, {{"v", 1}}), 0)[0].msg.payload["role"] == "waiting");
}

TEST_CASE("debounce: two strokes 100 ms apart give one snapshot now and one at the boundary")
{
    Harness h;
    h.pair();
    h.send(h.drawer, MessageType::StrokeAdd, {{"stroke", stroke_json(1)}}, 0);
    h.send(h.drawer, MessageType::StrokeAdd, {{"stroke", stroke_json(2, 50, 50)}}, 100);
    CHECK(h.snapshots.size() == 1);
    h.core.tick(999);
    CHECK(h.snapshots.size() == 1);
    h.core.tick(1000);
    REQUIRE(h.snapshots.size() == 2);
    CHECK(h.snapshots[1].strokes.size() == 2);
    CHECK(h.snapshots[1].snapshot_seq > h.snapshots[0].snapshot_seq);
    h.core.tick(5000);
    CHECK(h.snapshots.size() == 2);
}

TEST_CASE("debounce: one stroke gives exactly one snapshot; none gives none")
{
    Harness h;
    h.pair();
    for (std::int64_t t = 0; t <= 5000; t += 20)
        h.core.tick(t);
    CHECK(h.snapshots.empty());
    h.send(h.drawer, MessageType::StrokeAdd, {{"stroke", stroke_json(1)}}, 5010);
    for (std::int64_t t = 5010; t <= 10000; t += 20)
        h.core.tick(t);
    CHECK(h.snapshots.size() == 1);
}

TEST_CASE("debounce matches the simulated-clock oracle")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const std::int64_t interval = 100 + static_cast<std::int64_t>(rng() % 900);
        std::vector<std::int64_t> times;
        std::int64_t t = 0;
        const int n = 1 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) {
            t += static_cast<std::int64_t>(rng() % (2 * interval)) + 1;
            times.push_back(t);
        }
        const std::int64_t horizon = t + 3 * interval;
        const auto want = debounce_oracle(times, interval, horizon);

        Harness h(interval);
        h.pair();
        std::size_t k = 0;
        std::vector<std::int64_t> emitted_at;
        for (std::int64_t now = 0; now <= horizon; ++now) {
            while (k < times.size() && times[k] == now) {
                h.send(h.drawer, MessageType::StrokeAdd, {{"stroke", stroke_json(static_cast<std::int64_t>(k))}}, now);
                ++k;
            }
            h.core.tick(now);
            while (emitted_at.size() < h.snapshots.size())
                emitted_at.push_back(now);
        }
        REQUIRE(h.snapshots.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(emitted_at[i] == want[i].first);
            // Every stroke recorded up to the emission is in it, in order.
            REQUIRE(h.snapshots[i].strokes.size() == want[i].second);
            for (std::size_t j = 0; j < want[i].second; ++j)
                CHECK(h.snapshots[i].strokes[j].id == static_cast<std::int64_t>(j));
            if (i > 0) {
                CHECK(emitted_at[i] - emitted_at[i - 1] >= interval);
                CHECK(h.snapshots[i].snapshot_seq > h.snapshots[i - 1].snapshot_seq);
            }
        }
    }
}

TEST_CASE("relay debouncer unit behaviour")
{
    RelayDebouncer d({1000});
    CHECK(d.on_stroke("a", 0) == 1u);
    CHECK_FALSE(d.on_stroke("a", 10));
    CHECK(d.on_stroke("b", 10) == 1u);
    CHECK(d.pending("a"));
    CHECK(d.poll(999).empty());
    auto due = d.poll(1000);
    REQUIRE(due.size() == 1);
    CHECK(due[0].session_id == "a");
    CHECK(due[0].seq == 2u);
    CHECK(d.on_stroke("a", 2000) == 3u);
    d.forget("a");
    CHECK(d.on_stroke("a", 2001) == 1u);
    CHECK_THROWS_AS(RelayPolicy{0}.validate(), Error);
}

TEST_CASE("fuzz: random payloads only produce Error replies")
{
    Harness h;
    h.pair();
    std::mt19937_64 rng(0xf022);
    const std::vector<std::string> fragments = {
        "{", "}", "[", "]", "\"type\"", "\"Join\"", "\"StrokeAdd\"", "\"Guess\"", ":", ",", "\"seq\"", "1",
        "-3", "1e999", "null", "\"payload\"", "{\"v\":1}", "\"stroke\"", "\"pts\"", "true", "\xff", "\"\\u0000\""};
    const ConnId c = h.core.connect();
    for (int i = 0; i < 10000; ++i) {
        std::string s;
        if (i % 2 == 0) {
            const std::size_t n = rng() % 64;
            for (std::size_t j = 0; j < n; ++j)
                s.push_back(static_cast<char>(rng() & 0xff));
        } else {
            const std::size_t n = 1 + rng() % 12;
            for (std::size_t j = 0; j < n; ++j)
                s += fragments[rng() % fragments.size()];
        }
        const ConnId target = std::array<ConnId, 3>{c, h.drawer, h.guesser}[rng() % 3];
        const auto out = h.core.handle_raw(target, s, i);
        for (const auto &o : out) {
            CAPTURE(s);
            CHECK(o.msg.type == MessageType::Error);
        }
    }
    // Session still works.
    CHECK(h.registry.snapshot(h.sid)->state() == gamecore::SessionState::Active);
}

TEST_CASE("fuzz: structurally valid messages with junk payloads never escape as exceptions")
{
    Harness h;
    h.pair();
    std::mt19937_64 rng(77);
    const std::vector<json> junk = {json(), json(1), json("x"), json::array({1, 2}), json{{"text", 5}},
                                    json{{"stroke", "no"}}, json{{"kind", 3}}, json{{"alert_id", -1}},
                                    json{{"kind", "confirm"}, {"guess_index", "a"}}, json{{"x", "1"}, {"kind", "ping"}},
                                    json{{"stroke", {{"id", 1}, {"kind", "draw"}, {"t_ms", 0}, {"pts", json::array()}}}}};
    for (int i = 0; i < 2000; ++i) {
        const auto t = static_cast<MessageType>(rng() % 10);
        json frame{{"type", to_string(t)}, {"session_id", ""}, {"seq", 1'000'000 + i}, {"payload", junk[rng() % junk.size()]}};
        const ConnId c = rng() % 2 ? h.drawer : h.guesser;
        CHECK_NOTHROW(h.core.handle_raw(c, frame.dump(), 0));
    }
}

TEST_CASE("tcp: two clients play through the server")
{
    gamecore::SessionRegistry reg;
    alerts::AlertEngine eng;
    std::vector<strokes::CanvasSnapshot> snaps;
    std::mutex m;
    GatewayCore core(reg, eng, {}, {[&](const strokes::CanvasSnapshot &s) {
                                        std::lock_guard l(m);
                                        snaps.push_back(s);
                                    },
                                    {},
                                    {}});
    TcpServer server(core, {});
    server.start();
    REQUIRE(server.port() != 0);

    TcpClient a("127.0.0.1", server.port()), b("127.0.0.1", server.port());
    a.send(msg(MessageType::Join, 0, {{"v", 1}}));
    auto wa = a.receive(std::chrono::seconds(2));
    REQUIRE(wa);
    CHECK(wa->payload["role"] == "waiting");
    b.send(msg(MessageType::Join, 0, {{"v", 1}}));
    auto ra = a.receive_type(MessageType::RoleAssign, std::chrono::seconds(2));
    auto rb = b.receive_type(MessageType::RoleAssign, std::chrono::seconds(2));
    REQUIRE(ra);
    REQUIRE(rb);
    CHECK(rb->seq == 1);
    CHECK(ra->seq == 2);
    TcpClient &drawer = ra->payload["role"] == "drawer" ? a : b;
    TcpClient &guesser = ra->payload["role"] == "drawer" ? b : a;

    drawer.send(msg(MessageType::StrokeAdd, 0, {{"stroke", stroke_json(1)}}));
    auto echo = guesser.receive_type(MessageType::StrokeAdd, std::chrono::seconds(2));
    REQUIRE(echo);
    CHECK(echo->payload["stroke"]["id"] == 1);

    guesser.send(msg(MessageType::Guess, 0, {{"text", "bee"}}));
    auto g = drawer.receive_type(MessageType::Guess, std::chrono::seconds(2));
    REQUIRE(g);
    CHECK(g->payload["text"] == "bee");

    // Oversized frame header: server answers with an Error and hangs up on that client.
    guesser.send_raw(std::string("\x7f\xff\xff\xff", 4));
    auto err = guesser.receive_type(MessageType::Error, std::chrono::seconds(2));
    REQUIRE(err);
    CHECK(err->payload["code"] == "malformed");
    auto end = drawer.receive_type(MessageType::GameEnd, std::chrono::seconds(2));
    REQUIRE(end);
    CHECK(end->payload["reason"] == "disconnect");
    {
        std::lock_guard l(m);
        CHECK(snaps.size() == 1);
    }
    server.stop();
}
