// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/datakit/annotated.hpp"
#include "sketchwatch/datakit/augment.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sketchwatch::datakit {

/// Procedural stand-ins for real game data: doodles for clean canvases and small
/// hand-drawn-looking glyphs for the atypical classes. Sizes scale with the canvas.
struct SynthConfig {
    strokes::RenderConfig render{};
    double glyph_min = 0.16; // glyph height as a fraction of the canvas side
    double glyph_max = 0.28;
    double doodle_size = 0.40; // side of the doodle's region, same units
    double jitter = 0.6;       // point noise in pixels at 512, scaled with the canvas
    int doodle_strokes_min = 1;
    int doodle_strokes_max = 3;
};

/// Strokes of one glyph fitted inside `region`. Ids and timestamps count from 0.
std::vector<strokes::Stroke> synth_glyph(FineLabel label, const strokes::Rect &region, std::mt19937_64 &rng,
                                         const SynthConfig &cfg = {});

/// Random width/height for a glyph of `label` (text runs are wide).
strokes::Rect synth_glyph_region(FineLabel label, std::mt19937_64 &rng, const SynthConfig &cfg = {});

/// A canvas with one to a few doodle strokes and no annotations.
AnnotatedSession synth_clean(const std::string &phrase, std::uint64_t seed, const SynthConfig &cfg = {});

/// A clean canvas plus one glyph per entry of `labels`, each annotated.
AnnotatedSession synth_donor(const std::string &phrase, std::span<const FineLabel> labels, std::uint64_t seed,
                             const SynthConfig &cfg = {});

struct SynthDatasetSpec {
    std::vector<std::string> phrases{"cat", "house", "tree"};
    int clean_per_phrase = 10;
    int donors_per_phrase = 4;
    int augmented_per_phrase = 10;
    std::vector<FineLabel> labels{FineLabel::RunningHand, FineLabel::IndividualLetter, FineLabel::Number,
                                  FineLabel::Circle, FineLabel::Arrow, FineLabel::QuestionMark};
    std::uint64_t seed = 0;
    SynthConfig synth{};
};

/// Clean sessions, donors, then augmented sessions built from them, in that order.
std::vector<AnnotatedSession> synth_dataset(const SynthDatasetSpec &spec);

} // namespace sketchwatch::datakit
