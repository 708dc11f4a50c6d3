// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/datakit/annotated.hpp"

#include "sketchwatch/common/error.hpp"
#include "sketchwatch/gamecore/session.hpp"

#include <array>
#include <set>
#include <unordered_map>

namespace sketchwatch::datakit {

namespace {

constexpr std::array<std::pair<FineLabel, std::string_view>, 7> kLabels{{
    {FineLabel::IndividualLetter, "individual_letter"},
    {FineLabel::RunningHand, "running_hand"},
    {FineLabel::Number, "number"},
    {FineLabel::Circle, "circle"},
    {FineLabel::Arrow, "arrow"},
    {FineLabel::QuestionMark, "question_mark"},
    {FineLabel::Misc, "misc"},
}};

} // namespace

std::string_view to_string(FineLabel l)
{
    for (const auto &[k, v] : kLabels)
        if (k == l)
            return v;
    return "misc";
}

FineLabel fine_label_from_string(std::string_view s)
{
    for (const auto &[k, v] : kLabels)
        if (v == s)
            return k;
    throw Error(Errc::malformed, "unknown label '" + std::string(s) + "'");
}

Category coarse_category(FineLabel l)
{
    switch (l) {
    case FineLabel::IndividualLetter:
    case FineLabel::RunningHand:
        return Category::Text;
    case FineLabel::Number:
        return Category::Number;
    case FineLabel::Circle:
        return Category::Circle;
    case FineLabel::Arrow:
    case FineLabel::QuestionMark:
    case FineLabel::Misc:
        return Category::Icon;
    }
    return Category::Icon;
}

void AnnotatedSession::validate() const
{
    std::unordered_map<std::int64_t, strokes::StrokeKind> kinds;
    for (const auto &s : strokes)
        kinds.emplace(s.id, s.kind);
    std::set<std::int64_t> seen;
    for (const auto &a : annotations) {
        if (a.stroke_ids.empty())
            throw Error(Errc::invalid_argument, session_id + ": empty annotation");
        for (auto id : a.stroke_ids) {
            auto it = kinds.find(id);
            if (it == kinds.end())
                throw Error(Errc::invalid_argument, session_id + ": annotation names unknown stroke " + std::to_string(id));
            if (it->second != strokes::StrokeKind::Draw)
                throw Error(Errc::invalid_argument, session_id + ": annotation names erase stroke " + std::to_string(id));
            if (!seen.insert(id).second)
                throw Error(Errc::invalid_argument, session_id + ": stroke " + std::to_string(id) + " annotated twice");
        }
    }
}

std::vector<strokes::Stroke> AnnotatedSession::annotated_strokes(std::size_t i) const
{
    const auto &ids = annotations.at(i).stroke_ids;
    std::set<std::int64_t> want(ids.begin(), ids.end());
    std::vector<strokes::Stroke> out;
    for (const auto &s : strokes)
        if (s.kind == strokes::StrokeKind::Draw && want.count(s.id))
            out.push_back(s);
    return out;
}

strokes::CanvasSnapshot AnnotatedSession::snapshot() const
{
    strokes::CanvasSnapshot snap;
    snap.session_id = session_id;
    snap.strokes = strokes;
    snap.snapshot_seq = strokes.size();
    return snap;
}

AnnotatedSession from_game_record(const nlohmann::json &record, std::vector<Annotation> annotations)
{
    const auto game = gamecore::GameSession::replay(record);
    AnnotatedSession s;
    s.session_id = game.id();
    s.phrase = game.target();
    s.strokes = game.strokes();
    s.annotations = std::move(annotations);
    s.record = record;
    s.validate();
    return s;
}

nlohmann::json to_json(const AnnotatedSession &s)
{
    nlohmann::json j;
    j["session_id"] = s.session_id;
    j["phrase"] = s.phrase;
    auto &strokes = j["strokes"] = nlohmann::json::array();
    for (const auto &st : s.strokes)
        strokes.push_back(strokes::to_json(st));
    auto &ann = j["annotations"] = nlohmann::json::array();
    for (const auto &a : s.annotations)
        ann.push_back({{"stroke_ids", a.stroke_ids}, {"label", to_string(a.label)}});
    if (!s.record.is_null())
        j["record"] = s.record;
    return j;
}

AnnotatedSession annotated_session_from_json(const nlohmann::json &j)
{
    AnnotatedSession s;
    try {
        s.session_id = j.at("session_id").get<std::string>();
        s.phrase = j.at("phrase").get<std::string>();
        if (j.contains("strokes")) {
            for (const auto &st : j.at("strokes"))
                s.strokes.push_back(strokes::stroke_from_json(st));
        } else if (j.contains("record")) {
            s.strokes = gamecore::GameSession::replay(j.at("record")).strokes();
        }
        for (const auto &a : j.value("annotations", nlohmann::json::array()))
            s.annotations.push_back({a.at("stroke_ids").get<std::vector<std::int64_t>>(),
                                     fine_label_from_string(a.at("label").get<std::string>())});
        if (j.contains("record"))
            s.record = j.at("record");
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("bad annotated session: ") + e.what());
    }
    s.validate();
    return s;
}

std::vector<DetectionBox> ground_truth_boxes(const AnnotatedSession &s, const strokes::RenderConfig &cfg)
{
    std::vector<DetectionBox> out;
    for (std::size_t i = 0; i < s.annotations.size(); ++i) {
        const auto members = s.annotated_strokes(i);
        const auto r = strokes::stroke_bbox(members, cfg.draw_thickness, cfg.width, cfg.height);
        const auto g = detector::CenterBox::from_corners(r.x0, r.y0, r.x1, r.y1);
        out.push_back({g.cx, g.cy, g.w, g.h, s.annotations[i].category(), 1.0});
    }
    return out;
}

strokes::RenderedCanvas render(const AnnotatedSession &s, const strokes::RenderConfig &cfg)
{
    return strokes::rasterize(s.snapshot(), cfg);
}

} // namespace sketchwatch::datakit
