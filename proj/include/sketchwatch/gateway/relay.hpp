// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sketchwatch::gateway {

struct RelayPolicy {
    std::int64_t min_interval_ms = 1000;

    void validate() const;
};

/// Per-session debounce of canvas relays. A completed stroke triggers a relay at
/// once unless one went out less than min_interval_ms ago; then the relay is
/// deferred to the first poll at or after the interval boundary.
class RelayDebouncer {
public:
    explicit RelayDebouncer(RelayPolicy policy = {});

    /// Returns the snapshot_seq to emit now, if any.
    std::optional<std::uint64_t> on_stroke(const std::string &session_id, std::int64_t now_ms);

    struct Due {
        std::string session_id;
        std::uint64_t seq = 0;
    };
    /// Deferred relays whose interval has elapsed.
    std::vector<Due> poll(std::int64_t now_ms);

    void forget(const std::string &session_id);
    bool pending(const std::string &session_id) const;
    const RelayPolicy &policy() const { return policy_; }

private:
    struct State {
        std::optional<std::int64_t> last_emit;
        bool pending = false;
        std::uint64_t seq = 0;
    };
    RelayPolicy policy_;
    std::map<std::string, State> states_;
};

} // namespace sketchwatch::gateway
