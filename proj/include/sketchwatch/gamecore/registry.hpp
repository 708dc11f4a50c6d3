// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/gamecore/phrases.hpp"
#include "sketchwatch/gamecore/session.hpp"

#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sketchwatch::gamecore {

/// Owner of all live sessions. Every mutation goes through one lock, so each
/// session sees its events in arrival order.
class SessionRegistry {
public:
    explicit SessionRegistry(std::size_t capacity = 50, PhraseDictionary dictionary = default_dictionary(),
                             std::uint64_t seed = 0x5eed);

    /// Samples a target phrase, creates the session and starts it.
    /// Throws Error(capacity) when the registry is full.
    std::string create(const std::string &drawer, const std::string &guesser, const SessionOptions &opts,
                       std::int64_t now_ms);

    /// Runs `fn(GameSession&)` under the registry lock.
    /// Throws Error(unknown_session) for unknown ids.
    template <typename Fn>
    decltype(auto) with_session(const std::string &id, Fn &&fn)
    {
        std::lock_guard lock(mutex_);
        return fn(find_locked(id));
    }

    std::optional<GameSession> snapshot(const std::string &id) const;

    /// Sessions that timed out on this call.
    std::vector<std::string> tick_all(std::int64_t now_ms);

    /// Removes a session; used once its record has been persisted.
    std::optional<GameSession> remove(const std::string &id);

    std::size_t live_count() const;
    std::size_t capacity() const { return capacity_; }
    std::uint64_t phrase_count(const std::string &phrase) const;

private:
    GameSession &find_locked(const std::string &id);

    mutable std::mutex mutex_;
    std::size_t capacity_;
    PhraseDictionary dictionary_;
    std::mt19937_64 rng_;
    std::uint64_t next_id_ = 1;
    std::map<std::string, GameSession> sessions_;
};

struct Pairing {
    std::string drawer;
    std::string guesser;
};

/// FIFO lobby: the two longest-waiting players are paired and a coin flip picks
/// the Drawer.
class Matchmaker {
public:
    explicit Matchmaker(std::uint64_t seed = 0x9a11) : rng_(seed) {}

    std::optional<Pairing> join(const std::string &player);
    bool leave(const std::string &player);
    std::size_t waiting() const { return queue_.size(); }

private:
    std::deque<std::string> queue_;
    std::mt19937_64 rng_;
};

} // namespace sketchwatch::gamecore
