// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/gamecore/session.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <cctype>

namespace sketchwatch::gamecore {

std::string_view to_string(SessionState s)
{
    switch (s) {
    case SessionState::Waiting: return "waiting";
    case SessionState::Active: return "active";
    case SessionState::WonByGuess: return "won_by_guess";
    case SessionState::TimedOut: return "timed_out";
    }
    return "unknown";
}

std::string_view to_string(Role r)
{
    return r == Role::Drawer ? "drawer" : "guesser";
}

std::string_view to_string(FeedbackKind k)
{
    switch (k) {
    case FeedbackKind::ThumbsUp: return "thumbs_up";
    case FeedbackKind::ThumbsDown: return "thumbs_down";
    case FeedbackKind::Question: return "question";
    case FeedbackKind::HighlightPing: return "ping";
    }
    return "unknown";
}

FeedbackKind feedback_kind_from_string(std::string_view s)
{
    if (s == "thumbs_up")
        return FeedbackKind::ThumbsUp;
    if (s == "thumbs_down")
        return FeedbackKind::ThumbsDown;
    if (s == "question")
        return FeedbackKind::Question;
    if (s == "ping")
        return FeedbackKind::HighlightPing;
    throw Error(Errc::malformed, "unknown feedback kind '" + std::string(s) + "'");
}

namespace {

std::string fold_case(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

SessionState state_from_string(std::string_view s)
{
    for (auto st : {SessionState::Waiting, SessionState::Active, SessionState::WonByGuess, SessionState::TimedOut})
        if (to_string(st) == s)
            return st;
    throw Error(Errc::malformed, "unknown session state '" + std::string(s) + "'");
}

} // namespace

GameSession::GameSession(std::string session_id, std::string drawer_id, std::string guesser_id, std::string target,
                         SessionOptions opts)
    : id_(std::move(session_id)), drawer_(std::move(drawer_id)), guesser_(std::move(guesser_id)),
      target_(std::move(target)), opts_(opts)
{
    if (drawer_ == guesser_)
        throw Error(Errc::invalid_argument, "drawer and guesser must be different players");
}

std::optional<Role> GameSession::role_of(const std::string &player) const
{
    if (player == drawer_)
        return Role::Drawer;
    if (player == guesser_)
        return Role::Guesser;
    return std::nullopt;
}

void GameSession::require_active(std::int64_t now_ms) const
{
    if (state_ != SessionState::Active)
        throw Error(Errc::not_active, "session " + id_ + " is " + std::string(to_string(state_)));
    if (session_time(now_ms) > opts_.time_limit_ms)
        throw Error(Errc::not_active, "session " + id_ + " is past its time limit");
}

void GameSession::require_role(const std::string &sender, Role role) const
{
    auto r = role_of(sender);
    if (!r || *r != role)
        throw Error(Errc::wrong_role, "only the " + std::string(to_string(role)) + " may do that");
}

void GameSession::start(std::int64_t now_ms)
{
    if (state_ != SessionState::Waiting)
        throw Error(Errc::invalid_state, "session " + id_ + " already started");
    state_ = SessionState::Active;
    started_at_ms_ = now_ms;
    events_.push_back({{"type", "start"}, {"t_ms", 0}});
}

const strokes::Stroke &GameSession::add_stroke(const std::string &sender, strokes::Stroke stroke, std::int64_t now_ms)
{
    require_role(sender, Role::Drawer);
    require_active(now_ms);
    if (stroke.points.empty())
        throw Error(Errc::malformed, "stroke has no points");

    if (opts_.simplify.epsilon > 0.0)
        stroke = strokes::simplify(stroke, opts_.simplify);

    std::int64_t t = session_time(now_ms);
    if (!strokes_.empty())
        t = std::max(t, strokes_.back().timestamp_ms);
    stroke.timestamp_ms = t;

    const bool collides = std::any_of(strokes_.begin(), strokes_.end(), [&](const auto &s) { return s.id == stroke.id; });
    if (collides) {
        std::int64_t next = 0;
        for (const auto &s : strokes_)
            next = std::max(next, s.id + 1);
        stroke.id = next;
    }

    strokes_.push_back(std::move(stroke));
    events_.push_back({{"type", "stroke"}, {"t_ms", t}, {"stroke", strokes::to_json(strokes_.back())}});
    return strokes_.back();
}

GuessOutcome GameSession::submit_guess(const std::string &sender, std::string text, std::int64_t now_ms)
{
    require_role(sender, Role::Guesser);
    require_active(now_ms);
    const auto t = session_time(now_ms);
    guesses_.push_back({text, t});
    events_.push_back({{"type", "guess"}, {"t_ms", t}, {"text", text}});
    if (opts_.auto_confirm && fold_case(text) == fold_case(target_)) {
        state_ = SessionState::WonByGuess;
        events_.push_back({{"type", "won"}, {"t_ms", t}, {"guess_index", guesses_.size() - 1}});
        return GuessOutcome::Won;
    }
    return GuessOutcome::Pending;
}

GuessOutcome GameSession::confirm_guess(const std::string &sender, std::size_t guess_index, std::int64_t now_ms)
{
    require_role(sender, Role::Drawer);
    require_active(now_ms);
    if (guess_index >= guesses_.size())
        throw Error(Errc::not_found, "no guess #" + std::to_string(guess_index));
    const auto t = session_time(now_ms);
    state_ = SessionState::WonByGuess;
    events_.push_back({{"type", "confirm"}, {"t_ms", t}, {"guess_index", guess_index}});
    return GuessOutcome::Won;
}

void GameSession::record_feedback(const std::string &sender, FeedbackKind kind, std::optional<strokes::Point> point,
                                  std::int64_t now_ms)
{
    require_role(sender, kind == FeedbackKind::Question ? Role::Guesser : Role::Drawer);
    require_active(now_ms);
    if (kind == FeedbackKind::HighlightPing && !point)
        throw Error(Errc::malformed, "a ping needs a canvas point");
    if (kind != FeedbackKind::HighlightPing)
        point.reset();

    const auto t = session_time(now_ms);
    feedback_.push_back({kind, point, t});
    nlohmann::json ev{{"type", "feedback"}, {"t_ms", t}, {"kind", to_string(kind)}};
    if (point)
        ev["point"] = {point->x, point->y};
    events_.push_back(std::move(ev));
}

std::optional<SessionState> GameSession::tick(std::int64_t now_ms)
{
    if (state_ != SessionState::Active || session_time(now_ms) <= opts_.time_limit_ms)
        return std::nullopt;
    state_ = SessionState::TimedOut;
    events_.push_back({{"type", "timeout"}, {"t_ms", session_time(now_ms)}});
    return state_;
}

bool GameSession::end_on_disconnect(const std::string &player, std::int64_t now_ms)
{
    if (terminal())
        return false;
    const auto t = state_ == SessionState::Active ? session_time(now_ms) : 0;
    state_ = SessionState::TimedOut;
    events_.push_back({{"type", "disconnect"}, {"t_ms", t}, {"player", player}});
    return true;
}

bool GameSession::record_alert(const nlohmann::json &alert, std::int64_t now_ms)
{
    if (state_ != SessionState::Active)
        return false;
    events_.push_back({{"type", "alert"}, {"t_ms", session_time(now_ms)}, {"alert", alert}});
    return true;
}

nlohmann::json GameSession::to_record() const
{
    nlohmann::json rec{
        {"session_id", id_},
        {"target", target_},
        {"roles", {{"drawer", drawer_}, {"guesser", guesser_}}},
        {"started_at_ms", started_at_ms_},
        {"time_limit_s", static_cast<double>(opts_.time_limit_ms) / 1000.0},
        {"auto_confirm", opts_.auto_confirm},
        {"state", to_string(state_)},
        {"events", events_},
    };
    if (!outcome_.is_null())
        rec["outcome"] = outcome_;
    return rec;
}

GameSession GameSession::replay(const nlohmann::json &record)
{
    try {
        SessionOptions opts;
        opts.time_limit_ms = static_cast<std::int64_t>(record.at("time_limit_s").get<double>() * 1000.0 + 0.5);
        opts.auto_confirm = record.value("auto_confirm", false);
        // Logged strokes are already simplified.
        opts.simplify.epsilon = 0.0;

        const auto &roles = record.at("roles");
        GameSession s(record.at("session_id").get<std::string>(), roles.at("drawer").get<std::string>(),
                      roles.at("guesser").get<std::string>(), record.at("target").get<std::string>(), opts);
        const auto t0 = record.at("started_at_ms").get<std::int64_t>();

        for (const auto &ev : record.at("events")) {
            const auto type = ev.at("type").get<std::string>();
            const auto now = t0 + ev.at("t_ms").get<std::int64_t>();
            if (type == "start") {
                s.start(now);
            } else if (type == "stroke") {
                s.add_stroke(s.drawer_, strokes::stroke_from_json(ev.at("stroke")), now);
            } else if (type == "guess") {
                s.submit_guess(s.guesser_, ev.at("text").get<std::string>(), now);
            } else if (type == "won") {
                // Emitted by the auto-confirm guess preceding it.
            } else if (type == "confirm") {
                s.confirm_guess(s.drawer_, ev.at("guess_index").get<std::size_t>(), now);
            } else if (type == "feedback") {
                std::optional<strokes::Point> pt;
                if (ev.contains("point"))
                    pt = strokes::Point{ev["point"].at(0).get<double>(), ev["point"].at(1).get<double>()};
                const auto kind = feedback_kind_from_string(ev.at("kind").get<std::string>());
                s.record_feedback(kind == FeedbackKind::Question ? s.guesser_ : s.drawer_, kind, pt, now);
            } else if (type == "timeout") {
                s.tick(now);
            } else if (type == "disconnect") {
                s.end_on_disconnect(ev.at("player").get<std::string>(), now);
            } else if (type == "alert") {
                s.record_alert(ev.at("alert"), now);
            } else {
                throw Error(Errc::malformed, "unknown event type '" + type + "'");
            }
        }
        if (record.contains("state") && state_from_string(record["state"].get<std::string>()) != s.state())
            throw Error(Errc::malformed, "replayed state does not match the recorded state");
        if (record.contains("outcome"))
            s.attach_outcome(record["outcome"]);
        s.opts_.simplify = SessionOptions{}.simplify;
        return s;
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("bad session record: ") + e.what());
    }
}

} // namespace sketchwatch::gamecore
