// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/datakit/annotated.hpp"

#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace sketchwatch::datakit {

struct AugmentConfig {
    double min_angle = 0.0; // radians, sampled uniformly in [min_angle, max_angle)
    double max_angle = 2.0 * std::numbers::pi;
    int max_attempts = 100;
    strokes::RenderConfig render{};
};

/// Unclipped extent of the Draw points grown by thickness / 2.
strokes::Rect draw_extent(std::span<const strokes::Stroke> strokes, double thickness);

/// Zero-area intersections (touching edges) do not count as overlap.
bool overlaps(const strokes::Rect &a, const strokes::Rect &b);

/// Rotates `glyph` by `angle` about the centroid of its points, then places it at
/// a random spot where its extent lies on the canvas and overlaps no existing
/// Draw stroke's extent. New strokes get fresh ids and timestamps after the last
/// stroke. Throws Error(placement_failed) after max_attempts tries.
AnnotatedSession insert_glyph(const AnnotatedSession &clean, std::span<const strokes::Stroke> glyph, FineLabel label,
                              double angle, std::mt19937_64 &rng, const AugmentConfig &cfg = {});

/// Picks a clean session, a donor with the same phrase and one of its annotations,
/// and inserts that annotation's strokes into the clean canvas.
AnnotatedSession augment(std::span<const AnnotatedSession> clean_pool, std::span<const AnnotatedSession> donor_pool,
                         std::uint64_t seed, const AugmentConfig &cfg = {});

} // namespace sketchwatch::datakit
