// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sketchwatch {

// Reason codes travel over the wire in Error messages, so keep names stable.
enum class Errc {
    invalid_argument,
    malformed,
    unknown_type,
    bad_seq,
    wrong_role,
    unknown_session,
    not_active,
    already_joined,
    capacity,
    invalid_state,
    not_found,
    dimension,
    timeout,
    placement_failed,
    non_finite,
    io,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string &what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace sketchwatch
