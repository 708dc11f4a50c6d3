// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <json.hpp>

namespace sketchwatch::detector {

/// Network shape. Every separable convolution is a depthwise convolution followed
/// by a 1x1 pointwise convolution with bias, then mish.
struct NetConfig {
    int input_size = 512;
    int stem_channels = 64;
    int segments = 3;
    int dense_layers = 6;
    int growth_rate = 48;
    int bottleneck_width = 192; // output of the 1x1 conv inside each dense layer
    int extra_scales = 3;       // downsampling blocks after the extractor
    int extra_mid_channels = 128;
    int extra_out_channels = 256;
    int head_channels = 128;
    double anchor_base_factor = 1.5; // anchor side = factor * stride, before aspect
    std::vector<double> aspect_ratios{1.0, 2.0, 3.0, 4.0, 5.0, 1.0 / 2.0, 1.0 / 3.0, 1.0 / 5.0};
    std::vector<double> vertical_offsets{-0.25, 0.25}; // in cell heights

    /// 64x64 input and two prediction scales.
    static NetConfig toy();

    void validate() const;

    /// Side length of each prediction scale's feature map, finest first.
    std::vector<int> feature_map_sizes() const;
    int anchors_per_cell() const { return static_cast<int>(aspect_ratios.size() * vertical_offsets.size()); }
    std::size_t anchor_count() const;

    nlohmann::json to_json() const;
    static NetConfig from_json(const nlohmann::json &j);

    bool operator==(const NetConfig &) const = default;
};

} // namespace sketchwatch::detector
