// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace sketchwatch::strokes {

// Canvas pixels, origin at the top-left corner.
struct Point {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point &) const = default;
};

enum class StrokeKind { Draw, Erase };

struct Stroke {
    std::int64_t id = 0;
    StrokeKind kind = StrokeKind::Draw;
    std::int64_t timestamp_ms = 0; // since session start
    std::vector<Point> points;

    bool operator==(const Stroke &) const = default;
};

struct SimplifyConfig {
    double epsilon = 2.0;
};

struct CanvasSnapshot {
    std::string session_id;
    std::vector<Stroke> strokes;
    std::uint64_t snapshot_seq = 0;
};

struct RenderConfig {
    int width = 512;
    int height = 512;
    double draw_thickness = 4.0;
    double erase_thickness = 16.0;

    void validate() const;
};

/// Binary raster of a snapshot. Row-major, 0 = background, 1 = ink.
struct RenderedCanvas {
    std::string session_id;
    std::uint64_t snapshot_seq = 0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t ink_count() const;

    bool operator==(const RenderedCanvas &) const = default;
};

/// Axis-aligned box in corner form.
struct Rect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }

    bool operator==(const Rect &) const = default;
};

/// Ramer-Douglas-Peucker decimation. Keeps both endpoints; every dropped point lies
/// within epsilon of the segment that replaced it.
Stroke simplify(const Stroke &stroke, const SimplifyConfig &cfg = {});

/// Round-capped polylines, applied in timestamp order. A pixel is inked when its
/// center (x + 0.5, y + 0.5) lies within thickness/2 of the stroke polyline.
RenderedCanvas rasterize(const CanvasSnapshot &snapshot, const RenderConfig &cfg = {});

/// Extent of all Draw points grown by thickness/2 and clipped to the canvas.
/// Throws Error(invalid_argument) when the input has no Draw stroke.
Rect stroke_bbox(std::span<const Stroke> strokes, double thickness, double canvas_width = 512.0,
                 double canvas_height = 512.0);

/// Runs of consecutive Draw strokes; every Erase stroke closes the current run.
std::vector<std::vector<Stroke>> group_by_erase(std::span<const Stroke> strokes);

double distance_to_segment(Point p, Point a, Point b);

// Wire/file form: {id, kind:"draw"|"erase", t_ms, pts:[[x,y],...]}, points rounded to 0.01.
nlohmann::json to_json(const Stroke &stroke);
Stroke stroke_from_json(const nlohmann::json &j);

/// Binary PGM (P5), ink written as 255.
void write_pgm(std::ostream &out, const RenderedCanvas &canvas);

} // namespace sketchwatch::strokes
