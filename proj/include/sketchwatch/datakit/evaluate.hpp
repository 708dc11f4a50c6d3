// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/box.hpp"

#include <map>
#include <span>
#include <vector>

#include <json.hpp>

namespace sketchwatch::datakit {

using detector::Category;
using detector::DetectionBox;

enum class Interpolation { AllPoint, ElevenPoint };

struct EvalOptions {
    double iou_threshold = 0.5;
    std::size_t max_detections = 100; // per image and category
    Interpolation interpolation = Interpolation::AllPoint;
};

struct CategoryScore {
    double ap = 0.0;
    double ar = 0.0;
    std::size_t gt = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

struct EvalReport {
    std::map<Category, CategoryScore> per_category; // every category seen in gt or predictions
    double map = 0.0; // over categories present in the ground truth
    double mar = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    nlohmann::json to_json() const;
    std::string table() const;
};

/// Per category, detections are visited by confidence (ties: image, then position)
/// and matched to the unmatched ground truth of that category with the highest IoU
/// at or above the threshold. With no ground truth at all, mAP and mAR are 1 if
/// there are also no detections and 0 otherwise.
EvalReport evaluate(std::span<const std::vector<DetectionBox>> predictions,
                    std::span<const std::vector<DetectionBox>> ground_truth, const EvalOptions &opts = {});

/// Area under the precision envelope for one category, given the TP flag of each
/// ranked detection and the number of ground truths.
double average_precision(std::span<const char> ranked_tp, std::size_t gt_count, Interpolation mode);

} // namespace sketchwatch::datakit
