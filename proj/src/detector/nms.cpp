// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/detector/nms.hpp"

#include "sketchwatch/common/error.hpp"
#include "sketchwatch/detector/losses.hpp"

#include <algorithm>

namespace sketchwatch::detector {

void NmsConfig::validate() const
{
    if (!(score_threshold > 0.0 && score_threshold < 1.0))
        throw Error(Errc::invalid_argument, "score threshold must be in (0, 1)");
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
        throw Error(Errc::invalid_argument, "nms IoU threshold must be in (0, 1)");
}

std::vector<Candidate> decode_candidates(std::span<const double> probs, std::span<const double> offsets,
                                         std::span<const Anchor> anchors, double score_threshold, double canvas_w,
                                         double canvas_h)
{
    const std::size_t n = anchors.size();
    if (probs.size() != n * kNumClasses || offsets.size() != n * 4)
        throw Error(Errc::dimension, "prediction size does not match the anchor set");
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        for (int k = 1; k < kNumClasses; ++k)
            if (k != kBackground && probs[i * kNumClasses + k] > probs[i * kNumClasses + best])
                best = k;
        const double score = probs[i * kNumClasses + best];
        if (score < score_threshold)
            continue;
        CenterBox g = decode({offsets[i * 4], offsets[i * 4 + 1], offsets[i * 4 + 2], offsets[i * 4 + 3]},
                             anchors[i].box);
        if (!clip_to_canvas(g, canvas_w, canvas_h))
            continue;
        out.push_back({{g.cx, g.cy, g.w, g.h, static_cast<Category>(best), score}, i});
    }
    return out;
}

std::vector<Candidate> nms(std::vector<Candidate> candidates, double iou_threshold)
{
    std::sort(candidates.begin(), candidates.end(), [](const Candidate &a, const Candidate &b) {
        if (a.box.confidence != b.box.confidence)
            return a.box.confidence > b.box.confidence;
        return a.anchor_index < b.anchor_index;
    });
    std::vector<Candidate> kept;
    for (const auto &c : candidates) {
        bool suppressed = false;
        for (const auto &k : kept) {
            if (k.box.category == c.box.category && iou(k.box, c.box) > iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed)
            kept.push_back(c);
    }
    return kept;
}

std::vector<DetectionBox> decode_and_nms(std::span<const double> probs, std::span<const double> offsets,
                                         std::span<const Anchor> anchors, const NmsConfig &cfg, double canvas_w,
                                         double canvas_h)
{
    cfg.validate();
    auto kept = nms(decode_candidates(probs, offsets, anchors, cfg.score_threshold, canvas_w, canvas_h),
                    cfg.iou_threshold);
    std::vector<DetectionBox> boxes;
    boxes.reserve(kept.size());
    for (const auto &c : kept)
        boxes.push_back(c.box);
    return boxes;
}

} // namespace sketchwatch::detector
