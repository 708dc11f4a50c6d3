// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/strokes/stroke.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <utility>

namespace sketchwatch::strokes {

void RenderConfig::validate() const
{
    if (width <= 0 || height <= 0)
        throw Error(Errc::invalid_argument, "render size must be positive");
    if (!(draw_thickness > 0.0) || !(erase_thickness > 0.0))
        throw Error(Errc::invalid_argument, "stroke thickness must be positive");
}

std::size_t RenderedCanvas::ink_count() const
{
    return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

double distance_to_segment(Point p, Point a, Point b)
{
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    const double ex = a.x + t * dx - p.x;
    const double ey = a.y + t * dy - p.y;
    return std::sqrt(ex * ex + ey * ey);
}

Stroke simplify(const Stroke &stroke, const SimplifyConfig &cfg)
{
    const auto &pts = stroke.points;
    if (pts.size() <= 2)
        return stroke;

    const std::size_t n = pts.size();
    std::vector<char> keep(n, 0);
    keep[0] = 1;
    keep[n - 1] = 1;

    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, pts.size() - 1}};
    while (!stack.empty()) {
        auto [first, last] = stack.back();
        stack.pop_back();
        double max_dist = -1.0;
        std::size_t index = first;
        for (std::size_t i = first + 1; i < last; ++i) {
            const double d = distance_to_segment(pts[i], pts[first], pts[last]);
            if (d > max_dist) {
                max_dist = d;
                index = i;
            }
        }
        if (index != first && max_dist > cfg.epsilon) {
            keep[index] = 1;
            stack.emplace_back(first, index);
            stack.emplace_back(index, last);
        }
    }

    Stroke out = stroke;
    out.points.clear();
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (keep[i])
            out.points.push_back(pts[i]);
    return out;
}

namespace {

void paint_segment(RenderedCanvas &canvas, Point a, Point b, double radius, std::uint8_t value)
{
    const double r2 = radius * radius;
    const int x_lo = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - radius - 0.5)));
    const int x_hi = std::min(canvas.width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + radius - 0.5)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - radius - 0.5)));
    const int y_hi = std::min(canvas.height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + radius - 0.5)));

    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    for (int y = y_lo; y <= y_hi; ++y) {
        const double py = y + 0.5;
        auto *row = canvas.pixels.data() + static_cast<std::size_t>(y) * canvas.width;
        for (int x = x_lo; x <= x_hi; ++x) {
            const double px = x + 0.5;
            double t = 0.0;
            if (len2 > 0.0)
                t = std::clamp(((px - a.x) * dx + (py - a.y) * dy) / len2, 0.0, 1.0);
            const double ex = a.x + t * dx - px;
            const double ey = a.y + t * dy - py;
            if (ex * ex + ey * ey <= r2)
                row[x] = value;
        }
    }
}

} // namespace

RenderedCanvas rasterize(const CanvasSnapshot &snapshot, const RenderConfig &cfg)
{
    cfg.validate();
    RenderedCanvas canvas;
    canvas.session_id = snapshot.session_id;
    canvas.snapshot_seq = snapshot.snapshot_seq;
    canvas.width = cfg.width;
    canvas.height = cfg.height;
    canvas.pixels.assign(static_cast<std::size_t>(cfg.width) * cfg.height, 0);

    std::vector<std::size_t> order(snapshot.strokes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return snapshot.strokes[l].timestamp_ms < snapshot.strokes[r].timestamp_ms;
    });

    for (std::size_t idx : order) {
        const Stroke &s = snapshot.strokes[idx];
        if (s.points.empty())
            continue;
        const bool draw = s.kind == StrokeKind::Draw;
        const double radius = 0.5 * (draw ? cfg.draw_thickness : cfg.erase_thickness);
        const std::uint8_t value = draw ? 1 : 0;
        if (s.points.size() == 1) {
            paint_segment(canvas, s.points[0], s.points[0], radius, value);
            continue;
        }
        for (std::size_t i = 1; i < s.points.size(); ++i)
            paint_segment(canvas, s.points[i - 1], s.points[i], radius, value);
    }
    return canvas;
}

Rect stroke_bbox(std::span<const Stroke> strokes, double thickness, double canvas_width, double canvas_height)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    Rect r{inf, inf, -inf, -inf};
    bool any = false;
    for (const auto &s : strokes) {
        if (s.kind != StrokeKind::Draw)
            continue;
        for (const auto &p : s.points) {
            r.x0 = std::min(r.x0, p.x);
            r.y0 = std::min(r.y0, p.y);
            r.x1 = std::max(r.x1, p.x);
            r.y1 = std::max(r.y1, p.y);
            any = true;
        }
    }
    if (!any)
        throw Error(Errc::invalid_argument, "stroke_bbox needs at least one draw point");

    const double half = 0.5 * thickness;
    r.x0 = std::clamp(r.x0 - half, 0.0, canvas_width);
    r.y0 = std::clamp(r.y0 - half, 0.0, canvas_height);
    r.x1 = std::clamp(r.x1 + half, 0.0, canvas_width);
    r.y1 = std::clamp(r.y1 + half, 0.0, canvas_height);
    return r;
}

std::vector<std::vector<Stroke>> group_by_erase(std::span<const Stroke> strokes)
{
    std::vector<std::vector<Stroke>> groups;
    std::vector<Stroke> current;
    for (const auto &s : strokes) {
        if (s.kind == StrokeKind::Erase) {
            if (!current.empty())
                groups.push_back(std::move(current));
            current.clear();
            continue;
        }
        current.push_back(s);
    }
    if (!current.empty())
        groups.push_back(std::move(current));
    return groups;
}

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

} // namespace

nlohmann::json to_json(const Stroke &stroke)
{
    auto pts = nlohmann::json::array();
    for (const auto &p : stroke.points)
        pts.push_back({round2(p.x), round2(p.y)});
    return {
        {"id", stroke.id},
        {"kind", stroke.kind == StrokeKind::Draw ? "draw" : "erase"},
        {"t_ms", stroke.timestamp_ms},
        {"pts", std::move(pts)},
    };
}

Stroke stroke_from_json(const nlohmann::json &j)
{
    if (!j.is_object())
        throw Error(Errc::malformed, "stroke must be an object");
    auto require = [&](const char *key) -> const nlohmann::json & {
        auto it = j.find(key);
        if (it == j.end())
            throw Error(Errc::malformed, std::string("stroke is missing '") + key + "'");
        return *it;
    };

    Stroke s;
    const auto &id = require("id");
    const auto &kind = require("kind");
    const auto &t = require("t_ms");
    const auto &pts = require("pts");
    if (!id.is_number_integer() || !t.is_number_integer() || !kind.is_string() || !pts.is_array())
        throw Error(Errc::malformed, "stroke field has the wrong type");

    s.id = id.get<std::int64_t>();
    s.timestamp_ms = t.get<std::int64_t>();
    const auto &k = kind.get_ref<const std::string &>();
    if (k == "draw")
        s.kind = StrokeKind::Draw;
    else if (k == "erase")
        s.kind = StrokeKind::Erase;
    else
        throw Error(Errc::malformed, "stroke kind must be 'draw' or 'erase'");

    if (pts.empty())
        throw Error(Errc::malformed, "stroke has no points");
    s.points.reserve(pts.size());
    for (const auto &p : pts) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            throw Error(Errc::malformed, "stroke point must be [x, y]");
        Point pt{p[0].get<double>(), p[1].get<double>()};
        if (!std::isfinite(pt.x) || !std::isfinite(pt.y))
            throw Error(Errc::malformed, "stroke point is not finite");
        s.points.push_back(pt);
    }
    return s;
}

void write_pgm(std::ostream &out, const RenderedCanvas &canvas)
{
    out << "P5\n" << canvas.width << ' ' << canvas.height << "\n255\n";
    for (auto v : canvas.pixels)
        out.put(v ? static_cast<char>(255) : static_cast<char>(0));
}

} // namespace sketchwatch::strokes
