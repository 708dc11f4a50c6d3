// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/gateway/relay.hpp"

#include "sketchwatch/common/error.hpp"

namespace sketchwatch::gateway {

void RelayPolicy::validate() const
{
    if (min_interval_ms <= 0)
        throw Error(Errc::invalid_argument, "relay interval must be positive");
}

RelayDebouncer::RelayDebouncer(RelayPolicy policy) : policy_(policy) { policy_.validate(); }

std::optional<std::uint64_t> RelayDebouncer::on_stroke(const std::string &session_id, std::int64_t now_ms)
{
    auto &st = states_[session_id];
    if (!st.last_emit || now_ms - *st.last_emit >= policy_.min_interval_ms) {
        st.last_emit = now_ms;
        st.pending = false;
        return ++st.seq;
    }
    st.pending = true;
    return std::nullopt;
}

std::vector<RelayDebouncer::Due> RelayDebouncer::poll(std::int64_t now_ms)
{
    std::vector<Due> out;
    for (auto &[id, st] : states_) {
        if (!st.pending || now_ms - *st.last_emit < policy_.min_interval_ms)
            continue;
        st.pending = false;
        st.last_emit = now_ms;
        out.push_back({id, ++st.seq});
    }
    return out;
}

void RelayDebouncer::forget(const std::string &session_id) { states_.erase(session_id); }

bool RelayDebouncer::pending(const std::string &session_id) const
{
    auto it = states_.find(session_id);
    return it != states_.end() && it->second.pending;
}

} // namespace sketchwatch::gateway
