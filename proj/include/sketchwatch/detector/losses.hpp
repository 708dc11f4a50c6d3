// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/anchors.hpp"
#include "sketchwatch/detector/box.hpp"

#include <array>
#include <span>
#include <vector>

namespace sketchwatch::detector {

struct LossConfig {
    double alpha = 1000.0; // weight of the classification term
    double focal_gamma = 2.0;
    double focal_alpha = 0.25;
    double match_iou_positive = 0.5;
    double mining_iou_low = 0.45;
    double mining_iou_high = 0.55;

    void validate() const;
    nlohmann::json to_json() const;
    static LossConfig from_json(const nlohmann::json &j);
};

using Offsets = std::array<double, 4>; // (dcx / aw, dcy / ah, ln(w / aw), ln(h / ah))

Offsets encode(const CenterBox &box, const CenterBox &anchor);
CenterBox decode(const Offsets &offsets, const CenterBox &anchor);

/// 1 - IoU + |center distance|^2 / |enclosing diagonal|^2, in [0, 2).
double diou_loss(const CenterBox &pred, const CenterBox &gt);

/// Same value; writes d(loss)/d(cx, cy, w, h) of `pred` into `grad`.
double diou_loss(const CenterBox &pred, const CenterBox &gt, std::array<double, 4> &grad);

/// -alpha * (1 - p_t)^gamma * ln(p_t).
double focal_loss(double p_t, double gamma, double alpha);

/// Focal loss of a softmax row for `target`; adds d(loss)/d(logits) into `dlogits`.
double focal_loss_softmax(std::span<const double> probs, int target, double gamma, double alpha,
                          std::span<double> dlogits);

/// Per-anchor training targets. labels[i] is a category index, kBackground for negatives.
struct AnchorTargets {
    std::vector<int> labels;
    std::vector<int> gt_index; // -1 for negatives
    std::vector<Offsets> offsets;
    std::size_t positives = 0;
};

/// Anchor i is positive for the ground truth it overlaps most when that IoU is at
/// least `match_iou_positive`. Each ground truth also claims its best anchor
/// (lowest index on ties); a contested anchor goes to the ground truth with the
/// higher IoU (lower index on ties). Claims override threshold matches.
AnchorTargets match_anchors(std::span<const Anchor> anchors, std::span<const DetectionBox> gts,
                            const LossConfig &cfg);

struct LossInput {
    std::span<const double> probs;   // N x kNumClasses, softmax rows
    std::span<const double> offsets; // N x 4 predicted offsets
    const AnchorTargets *targets = nullptr;
    std::span<const Anchor> anchors;
    // Mined false positives counted again as Background in the classification mean.
    std::span<const std::size_t> hard_negatives{};
};

struct LossTerms {
    double total = 0.0;
    double classification = 0.0; // mean focal loss, before alpha
    double localization = 0.0;   // mean DIoU over positives
    std::size_t anchors = 0;
    std::size_t positives = 0;
};

/// alpha * mean focal loss over all anchors + mean DIoU loss over positive anchors
/// (0 when there are none).
LossTerms total_loss(const LossInput &in, const LossConfig &cfg);

/// As total_loss, also accumulating gradients w.r.t. the logits and offsets.
LossTerms total_loss(const LossInput &in, const LossConfig &cfg, std::span<double> dlogits, std::span<double> doffsets);

} // namespace sketchwatch::detector
