// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/strokes/stroke.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sketchwatch::gamecore {

enum class SessionState { Waiting, Active, WonByGuess, TimedOut };
enum class Role { Drawer, Guesser };
enum class FeedbackKind { ThumbsUp, ThumbsDown, Question, HighlightPing };
enum class GuessOutcome { Pending, Won };

std::string_view to_string(SessionState s);
std::string_view to_string(Role r);
std::string_view to_string(FeedbackKind k);
FeedbackKind feedback_kind_from_string(std::string_view s);

struct SessionOptions {
    std::int64_t time_limit_ms = 120'000;
    // Test mode: a case-insensitive exact match ends the game without the
    // Drawer's confirmation.
    bool auto_confirm = false;
    strokes::SimplifyConfig simplify{};
};

struct GuessRecord {
    std::string text;
    std::int64_t t_ms = 0;
};

struct FeedbackRecord {
    FeedbackKind kind = FeedbackKind::ThumbsUp;
    std::optional<strokes::Point> point;
    std::int64_t t_ms = 0;
};

/// One Drawer/Guesser game. Timestamps in the event log are milliseconds since
/// the session started; `now_ms` arguments are on the server clock.
class GameSession {
public:
    GameSession(std::string session_id, std::string drawer_id, std::string guesser_id, std::string target,
                SessionOptions opts = {});

    void start(std::int64_t now_ms);

    /// Drawer only. Simplifies the stroke, stamps it with the session time and
    /// assigns the next stroke id when the client id collides.
    const strokes::Stroke &add_stroke(const std::string &sender, strokes::Stroke stroke, std::int64_t now_ms);

    GuessOutcome submit_guess(const std::string &sender, std::string text, std::int64_t now_ms);

    /// Drawer accepts guess `guess_index` as correct.
    GuessOutcome confirm_guess(const std::string &sender, std::size_t guess_index, std::int64_t now_ms);

    void record_feedback(const std::string &sender, FeedbackKind kind, std::optional<strokes::Point> point,
                         std::int64_t now_ms);

    /// Returns the new state when the time limit expires on this call.
    std::optional<SessionState> tick(std::int64_t now_ms);

    /// A player left; the game ends as TimedOut and the log notes who left.
    bool end_on_disconnect(const std::string &player, std::int64_t now_ms);

    /// Appends an alert payload to the log. Ignored once the game is over.
    bool record_alert(const nlohmann::json &alert, std::int64_t now_ms);

    void attach_outcome(nlohmann::json outcome) { outcome_ = std::move(outcome); }

    const std::string &id() const { return id_; }
    const std::string &drawer() const { return drawer_; }
    const std::string &guesser() const { return guesser_; }
    const std::string &target() const { return target_; }
    SessionState state() const { return state_; }
    bool terminal() const { return state_ == SessionState::WonByGuess || state_ == SessionState::TimedOut; }
    std::int64_t started_at_ms() const { return started_at_ms_; }
    std::int64_t elapsed_ms(std::int64_t now_ms) const { return now_ms - started_at_ms_; }
    const SessionOptions &options() const { return opts_; }
    const std::vector<strokes::Stroke> &strokes() const { return strokes_; }
    const std::vector<GuessRecord> &guesses() const { return guesses_; }
    const std::vector<FeedbackRecord> &feedback() const { return feedback_; }
    const nlohmann::json &events() const { return events_; }
    std::optional<Role> role_of(const std::string &player) const;

    /// Persisted form: {session_id, target, roles, started_at_ms, options, state, events, outcome?}.
    nlohmann::json to_record() const;

    /// Rebuilds a session by re-applying a persisted event log.
    static GameSession replay(const nlohmann::json &record);

private:
    void require_active(std::int64_t now_ms) const;
    void require_role(const std::string &sender, Role role) const;
    std::int64_t session_time(std::int64_t now_ms) const { return now_ms - started_at_ms_; }

    std::string id_;
    std::string drawer_;
    std::string guesser_;
    std::string target_;
    SessionOptions opts_;
    SessionState state_ = SessionState::Waiting;
    std::int64_t started_at_ms_ = 0;
    std::vector<strokes::Stroke> strokes_;
    std::vector<GuessRecord> guesses_;
    std::vector<FeedbackRecord> feedback_;
    nlohmann::json events_ = nlohmann::json::array();
    nlohmann::json outcome_;
};

} // namespace sketchwatch::gamecore
