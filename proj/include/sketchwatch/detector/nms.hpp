// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/anchors.hpp"
#include "sketchwatch/detector/box.hpp"

#include <span>
#include <vector>

namespace sketchwatch::detector {

struct NmsConfig {
    double score_threshold = 0.5;
    double iou_threshold = 0.45;

    void validate() const;
};

/// A decoded box and the anchor it came from.
struct Candidate {
    DetectionBox box;
    std::size_t anchor_index = 0;
};

/// Anchors whose best non-background probability reaches `score_threshold`, decoded
/// and clipped to the canvas. Boxes clipped to nothing are dropped.
std::vector<Candidate> decode_candidates(std::span<const double> probs, std::span<const double> offsets,
                                         std::span<const Anchor> anchors, double score_threshold, double canvas_w,
                                         double canvas_h);

/// Greedy per-class suppression. Visits candidates by confidence (descending), then
/// anchor index; drops any candidate whose IoU with a kept box of its class exceeds
/// `iou_threshold`. Output is in visiting order.
std::vector<Candidate> nms(std::vector<Candidate> candidates, double iou_threshold);

std::vector<DetectionBox> decode_and_nms(std::span<const double> probs, std::span<const double> offsets,
                                         std::span<const Anchor> anchors, const NmsConfig &cfg, double canvas_w,
                                         double canvas_h);

} // namespace sketchwatch::detector
