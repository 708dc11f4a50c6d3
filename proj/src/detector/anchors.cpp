// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/detector/anchors.hpp"

#include <cmath>

namespace sketchwatch::detector {

std::vector<Anchor> generate_anchors(std::span<const ScaleSpec> scales, std::span<const double> aspect_ratios,
                                     std::span<const double> vertical_offsets, double base_factor)
{
    std::vector<Anchor> anchors;
    for (std::size_t s = 0; s < scales.size(); ++s) {
        const auto &sc = scales[s];
        const double base = base_factor * sc.stride;
        for (int row = 0; row < sc.map_size; ++row) {
            for (int col = 0; col < sc.map_size; ++col) {
                for (double ratio : aspect_ratios) {
                    const double root = std::sqrt(ratio);
                    for (double off : vertical_offsets) {
                        Anchor a;
                        a.box = {(col + 0.5) * sc.stride, (row + 0.5 + off) * sc.stride, base * root, base / root};
                        a.scale_index = static_cast<int>(s);
                        a.cell_row = row;
                        a.cell_col = col;
                        a.aspect_ratio = ratio;
                        a.vertical_offset = off;
                        anchors.push_back(a);
                    }
                }
            }
        }
    }
    return anchors;
}

std::vector<Anchor> generate_anchors(const NetConfig &cfg)
{
    cfg.validate();
    std::vector<ScaleSpec> scales;
    for (int f : cfg.feature_map_sizes())
        scales.push_back({f, static_cast<double>(cfg.input_size) / f});
    return generate_anchors(scales, cfg.aspect_ratios, cfg.vertical_offsets, cfg.anchor_base_factor);
}

} // namespace sketchwatch::detector
