// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/detector/config.hpp"

#include "sketchwatch/common/error.hpp"

#include <string>

namespace sketchwatch::detector {

NetConfig NetConfig::toy()
{
    NetConfig cfg;
    cfg.input_size = 64;
    cfg.extra_scales = 1;
    return cfg;
}

void NetConfig::validate() const
{
    auto positive = [](int v, const char *name) {
        if (v <= 0)
            throw Error(Errc::invalid_argument, std::string(name) + " must be positive");
    };
    positive(input_size, "input_size");
    positive(stem_channels, "stem_channels");
    positive(segments, "segments");
    positive(dense_layers, "dense_layers");
    positive(growth_rate, "growth_rate");
    positive(bottleneck_width, "bottleneck_width");
    positive(head_channels, "head_channels");
    if (extra_scales < 0)
        throw Error(Errc::invalid_argument, "extra_scales must be non-negative");
    if (extra_scales > 0) {
        positive(extra_mid_channels, "extra_mid_channels");
        positive(extra_out_channels, "extra_out_channels");
    }
    const int divisor = 1 << (segments + 1);
    if (input_size % divisor != 0)
        throw Error(Errc::invalid_argument,
                    "input_size must be divisible by " + std::to_string(divisor) + " for this segment count");
    if (aspect_ratios.empty() || vertical_offsets.empty())
        throw Error(Errc::invalid_argument, "anchor ratios and offsets must be non-empty");
    for (double r : aspect_ratios)
        if (!(r > 0.0))
            throw Error(Errc::invalid_argument, "aspect ratios must be positive");
    if (!(anchor_base_factor > 0.0))
        throw Error(Errc::invalid_argument, "anchor_base_factor must be positive");
}

std::vector<int> NetConfig::feature_map_sizes() const
{
    int size = input_size / 2;
    for (int s = 0; s < segments; ++s)
        size /= 2;
    std::vector<int> sizes{size};
    for (int e = 0; e < extra_scales; ++e) {
        size = (size + 1) / 2;
        sizes.push_back(size);
    }
    return sizes;
}

std::size_t NetConfig::anchor_count() const
{
    std::size_t cells = 0;
    for (int f : feature_map_sizes())
        cells += static_cast<std::size_t>(f) * f;
    return cells * static_cast<std::size_t>(anchors_per_cell());
}

nlohmann::json NetConfig::to_json() const
{
    return {
        {"input_size", input_size},
        {"stem_channels", stem_channels},
        {"segments", segments},
        {"dense_layers", dense_layers},
        {"growth_rate", growth_rate},
        {"bottleneck_width", bottleneck_width},
        {"extra_scales", extra_scales},
        {"extra_mid_channels", extra_mid_channels},
        {"extra_out_channels", extra_out_channels},
        {"head_channels", head_channels},
        {"anchor_base_factor", anchor_base_factor},
        {"aspect_ratios", aspect_ratios},
        {"vertical_offsets", vertical_offsets},
    };
}

NetConfig NetConfig::from_json(const nlohmann::json &j)
{
    NetConfig cfg;
    try {
        cfg.input_size = j.value("input_size", cfg.input_size);
        cfg.stem_channels = j.value("stem_channels", cfg.stem_channels);
        cfg.segments = j.value("segments", cfg.segments);
        cfg.dense_layers = j.value("dense_layers", cfg.dense_layers);
        cfg.growth_rate = j.value("growth_rate", cfg.growth_rate);
        cfg.bottleneck_width = j.value("bottleneck_width", cfg.bottleneck_width);
        cfg.extra_scales = j.value("extra_scales", cfg.extra_scales);
        cfg.extra_mid_channels = j.value("extra_mid_channels", cfg.extra_mid_channels);
        cfg.extra_out_channels = j.value("extra_out_channels", cfg.extra_out_channels);
        cfg.head_channels = j.value("head_channels", cfg.head_channels);
        cfg.anchor_base_factor = j.value("anchor_base_factor", cfg.anchor_base_factor);
        cfg.aspect_ratios = j.value("aspect_ratios", cfg.aspect_ratios);
        cfg.vertical_offsets = j.value("vertical_offsets", cfg.vertical_offsets);
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("bad network config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

} // namespace sketchwatch::detector
