// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/box.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sketchwatch::pipeline {

using Clock = std::chrono::steady_clock;

/// What the detection stage hands to the alert generator for one snapshot.
struct DetectionResult {
    std::string session_id;
    std::uint64_t snapshot_seq = 0;
    std::vector<detector::DetectionBox> boxes;
    int detector_id = 0;
    double detect_ms = 0.0;
    std::optional<std::string> error; // set when the detector failed; boxes are then empty
    Clock::time_point submitted_at{};
};

} // namespace sketchwatch::pipeline
