// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/gamecore/registry.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>

namespace sketchwatch::gamecore {

SessionRegistry::SessionRegistry(std::size_t capacity, PhraseDictionary dictionary, std::uint64_t seed)
    : capacity_(capacity), dictionary_(std::move(dictionary)), rng_(seed)
{
    if (capacity_ == 0)
        throw Error(Errc::invalid_argument, "registry capacity must be positive");
}

std::string SessionRegistry::create(const std::string &drawer, const std::string &guesser,
                                    const SessionOptions &opts, std::int64_t now_ms)
{
    std::lock_guard lock(mutex_);
    std::size_t live = 0;
    for (const auto &[id, s] : sessions_)
        live += s.terminal() ? 0 : 1;
    if (live >= capacity_)
        throw Error(Errc::capacity, "session capacity reached");

    std::string id = "s-" + std::to_string(next_id_++);
    const std::string target = dictionary_.sample(rng_);
    auto [it, inserted] = sessions_.try_emplace(id, id, drawer, guesser, target, opts);
    it->second.start(now_ms);
    return id;
}

GameSession &SessionRegistry::find_locked(const std::string &id)
{
    auto it = sessions_.find(id);
    if (it == sessions_.end())
        throw Error(Errc::unknown_session, "unknown session '" + id + "'");
    return it->second;
}

std::optional<GameSession> SessionRegistry::snapshot(const std::string &id) const
{
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end())
        return std::nullopt;
    return it->second;
}

std::vector<std::string> SessionRegistry::tick_all(std::int64_t now_ms)
{
    std::lock_guard lock(mutex_);
    std::vector<std::string> ended;
    for (auto &[id, s] : sessions_)
        if (s.tick(now_ms))
            ended.push_back(id);
    return ended;
}

std::optional<GameSession> SessionRegistry::remove(const std::string &id)
{
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end())
        return std::nullopt;
    GameSession s = std::move(it->second);
    sessions_.erase(it);
    return s;
}

std::size_t SessionRegistry::live_count() const
{
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(
        std::count_if(sessions_.begin(), sessions_.end(), [](const auto &kv) { return !kv.second.terminal(); }));
}

std::uint64_t SessionRegistry::phrase_count(const std::string &phrase) const
{
    std::lock_guard lock(mutex_);
    return dictionary_.count_of(phrase);
}

std::optional<Pairing> Matchmaker::join(const std::string &player)
{
    if (std::find(queue_.begin(), queue_.end(), player) != queue_.end())
        throw Error(Errc::already_joined, "player '" + player + "' is already waiting");
    queue_.push_back(player);
    if (queue_.size() < 2)
        return std::nullopt;

    std::string a = std::move(queue_.front());
    queue_.pop_front();
    std::string b = std::move(queue_.front());
    queue_.pop_front();
    if (rng_() & 1u)
        std::swap(a, b);
    return Pairing{std::move(a), std::move(b)};
}

bool Matchmaker::leave(const std::string &player)
{
    auto it = std::find(queue_.begin(), queue_.end(), player);
    if (it == queue_.end())
        return false;
    queue_.erase(it);
    return true;
}

} // namespace sketchwatch::gamecore
