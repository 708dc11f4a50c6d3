// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/common/error.hpp"

namespace sketchwatch {

std::string_view to_string(Errc code)
{
    switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::malformed: return "malformed";
    case Errc::unknown_type: return "unknown_type";
    case Errc::bad_seq: return "bad_seq";
    case Errc::wrong_role: return "wrong_role";
    case Errc::unknown_session: return "unknown_session";
    case Errc::not_active: return "not_active";
    case Errc::already_joined: return "already_joined";
    case Errc::capacity: return "capacity";
    case Errc::invalid_state: return "invalid_state";
    case Errc::not_found: return "not_found";
    case Errc::dimension: return "dimension";
    case Errc::timeout: return "timeout";
    case Errc::placement_failed: return "placement_failed";
    case Errc::non_finite: return "non_finite";
    case Errc::io: return "io";
    }
    return "unknown";
}

} // namespace sketchwatch
