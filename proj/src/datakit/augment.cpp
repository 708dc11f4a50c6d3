// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/datakit/augment.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sketchwatch::datakit {

strokes::Rect draw_extent(std::span<const strokes::Stroke> strokes, double thickness)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    strokes::Rect r{inf, inf, -inf, -inf};
    for (const auto &s : strokes) {
        if (s.kind != strokes::StrokeKind::Draw)
            continue;
        for (const auto &p : s.points) {
            r.x0 = std::min(r.x0, p.x);
            r.y0 = std::min(r.y0, p.y);
            r.x1 = std::max(r.x1, p.x);
            r.y1 = std::max(r.y1, p.y);
        }
    }
    if (r.x0 > r.x1)
        throw Error(Errc::invalid_argument, "no draw points");
    const double half = 0.5 * thickness;
    return {r.x0 - half, r.y0 - half, r.x1 + half, r.y1 + half};
}

bool overlaps(const strokes::Rect &a, const strokes::Rect &b)
{
    return std::min(a.x1, b.x1) > std::max(a.x0, b.x0) && std::min(a.y1, b.y1) > std::max(a.y0, b.y0);
}

AnnotatedSession insert_glyph(const AnnotatedSession &clean, std::span<const strokes::Stroke> glyph, FineLabel label,
                              double angle, std::mt19937_64 &rng, const AugmentConfig &cfg)
{
    std::vector<strokes::Stroke> moved;
    double cx = 0.0, cy = 0.0;
    std::size_t count = 0;
    for (const auto &s : glyph) {
        if (s.kind != strokes::StrokeKind::Draw)
            continue;
        moved.push_back(s);
        for (const auto &p : s.points) {
            cx += p.x;
            cy += p.y;
            ++count;
        }
    }
    if (count == 0)
        throw Error(Errc::invalid_argument, "glyph has no draw points");
    cx /= static_cast<double>(count);
    cy /= static_cast<double>(count);
    const double c = std::cos(angle), s = std::sin(angle);
    for (auto &st : moved)
        for (auto &p : st.points) {
            const double dx = p.x - cx, dy = p.y - cy;
            p = {cx + c * dx - s * dy, cy + s * dx + c * dy};
        }

    const double thick = cfg.render.draw_thickness;
    const auto ext = draw_extent(moved, thick);
    std::vector<strokes::Rect> occupied;
    for (const auto &st : clean.strokes)
        if (st.kind == strokes::StrokeKind::Draw && !st.points.empty())
            occupied.push_back(draw_extent(std::span(&st, 1), thick));

    const double room_x = cfg.render.width - ext.width();
    const double room_y = cfg.render.height - ext.height();
    if (room_x < 0 || room_y < 0)
        throw Error(Errc::placement_failed, "glyph is larger than the canvas");
    std::uniform_real_distribution<double> ux(0.0, room_x), uy(0.0, room_y);
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        const double x0 = ux(rng), y0 = uy(rng);
        const strokes::Rect at{x0, y0, x0 + ext.width(), y0 + ext.height()};
        if (std::any_of(occupied.begin(), occupied.end(), [&](const auto &r) { return overlaps(r, at); }))
            continue;

        AnnotatedSession out = clean;
        std::int64_t next_id = 0, next_t = 0;
        for (const auto &st : clean.strokes) {
            next_id = std::max(next_id, st.id + 1);
            next_t = std::max(next_t, st.timestamp_ms + 1);
        }
        const std::int64_t t0 = moved.front().timestamp_ms;
        Annotation ann{{}, label};
        for (auto st : moved) {
            for (auto &p : st.points)
                p = {p.x - ext.x0 + x0, p.y - ext.y0 + y0};
            st.id = next_id++;
            st.timestamp_ms = next_t + std::max<std::int64_t>(0, st.timestamp_ms - t0);
            ann.stroke_ids.push_back(st.id);
            out.strokes.push_back(std::move(st));
        }
        out.annotations.push_back(std::move(ann));
        out.record = nullptr;
        return out;
    }
    throw Error(Errc::placement_failed,
                "no free spot for the glyph after " + std::to_string(cfg.max_attempts) + " attempts");
}

AnnotatedSession augment(std::span<const AnnotatedSession> clean_pool, std::span<const AnnotatedSession> donor_pool,
                         std::uint64_t seed, const AugmentConfig &cfg)
{
    std::vector<const AnnotatedSession *> clean;
    for (const auto &s : clean_pool)
        if (!s.has_annotations())
            clean.push_back(&s);
    if (clean.empty())
        throw Error(Errc::not_found, "no clean session to augment");
    std::mt19937_64 rng(seed);
    const auto &base = *clean[std::uniform_int_distribution<std::size_t>(0, clean.size() - 1)(rng)];

    std::vector<const AnnotatedSession *> donors;
    for (const auto &s : donor_pool)
        if (s.phrase == base.phrase && s.has_annotations())
            donors.push_back(&s);
    if (donors.empty())
        throw Error(Errc::not_found, "no donor shares the phrase '" + base.phrase + "'");
    const auto &donor = *donors[std::uniform_int_distribution<std::size_t>(0, donors.size() - 1)(rng)];
    const std::size_t ai = std::uniform_int_distribution<std::size_t>(0, donor.annotations.size() - 1)(rng);
    const double angle = std::uniform_real_distribution<double>(cfg.min_angle, cfg.max_angle)(rng);

    auto out = insert_glyph(base, donor.annotated_strokes(ai), donor.annotations[ai].label, angle, rng, cfg);
    out.session_id = base.session_id + "+" + donor.session_id + "." + std::to_string(ai) + "@" + std::to_string(seed);
    return out;
}

} // namespace sketchwatch::datakit
