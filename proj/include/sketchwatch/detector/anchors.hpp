// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/box.hpp"
#include "sketchwatch/detector/config.hpp"

#include <span>
#include <vector>

namespace sketchwatch::detector {

struct Anchor {
    CenterBox box;
    int scale_index = 0;
    int cell_row = 0;
    int cell_col = 0;
    double aspect_ratio = 1.0;
    double vertical_offset = 0.0;
};

struct ScaleSpec {
    int map_size = 0;   // cells per side
    double stride = 0;  // canvas pixels per cell
};

/// Ordered scale, row, column, aspect ratio, vertical offset. Each anchor has the
/// area of a (base_factor * stride)^2 square and width/height ratio = aspect.
std::vector<Anchor> generate_anchors(std::span<const ScaleSpec> scales, std::span<const double> aspect_ratios,
                                     std::span<const double> vertical_offsets, double base_factor);

std::vector<Anchor> generate_anchors(const NetConfig &cfg);

} // namespace sketchwatch::detector
