// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/box.hpp"
#include "sketchwatch/strokes/stroke.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sketchwatch::datakit {

using detector::Category;
using detector::DetectionBox;

/// Labels as annotated. Training maps them onto the four coarse categories.
enum class FineLabel { IndividualLetter, RunningHand, Number, Circle, Arrow, QuestionMark, Misc };

std::string_view to_string(FineLabel l);
FineLabel fine_label_from_string(std::string_view s);
Category coarse_category(FineLabel l);

struct Annotation {
    std::vector<std::int64_t> stroke_ids;
    FineLabel label = FineLabel::RunningHand;

    Category category() const { return coarse_category(label); }
    bool operator==(const Annotation &) const = default;
};

/// A replayable session plus the stroke subsets that hold atypical content.
struct AnnotatedSession {
    std::string session_id;
    std::string phrase;
    std::vector<strokes::Stroke> strokes; // full canvas history, draw and erase
    std::vector<Annotation> annotations;
    nlohmann::json record; // the originating game record, when there is one

    bool has_annotations() const { return !annotations.empty(); }

    /// Annotated ids must name Draw strokes and no stroke may carry two labels.
    void validate() const;

    /// Draw strokes of annotation `i`, in canvas order.
    std::vector<strokes::Stroke> annotated_strokes(std::size_t i) const;

    strokes::CanvasSnapshot snapshot() const;

    bool operator==(const AnnotatedSession &o) const
    {
        return session_id == o.session_id && phrase == o.phrase && strokes == o.strokes &&
               annotations == o.annotations;
    }
};

/// Builds from a persisted game record (see GameSession::to_record).
AnnotatedSession from_game_record(const nlohmann::json &record, std::vector<Annotation> annotations);

// File form: {session_id, phrase, strokes:[...], annotations:[{stroke_ids, label}], record?}
nlohmann::json to_json(const AnnotatedSession &s);
AnnotatedSession annotated_session_from_json(const nlohmann::json &j);

/// One confidence-1 box per annotation: the extent of its Draw strokes grown by
/// half the draw thickness.
std::vector<DetectionBox> ground_truth_boxes(const AnnotatedSession &s, const strokes::RenderConfig &cfg = {});

strokes::RenderedCanvas render(const AnnotatedSession &s, const strokes::RenderConfig &cfg = {});

} // namespace sketchwatch::datakit
