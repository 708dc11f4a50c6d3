// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string_view>

#include <json.hpp>

namespace sketchwatch::detector {

/// Coarse atypical-content classes. Background only appears in training targets.
enum class Category : int { Text = 0, Number = 1, Circle = 2, Icon = 3, Background = 4 };

inline constexpr int kNumClasses = 5;
inline constexpr int kBackground = static_cast<int>(Category::Background);
inline constexpr std::array<Category, 4> kAtypicalCategories{Category::Text, Category::Number, Category::Circle,
                                                             Category::Icon};

std::string_view to_string(Category c);
Category category_from_string(std::string_view s);

/// Center-form box in canvas pixels.
struct CenterBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    double x0() const { return cx - 0.5 * w; }
    double x1() const { return cx + 0.5 * w; }
    double y0() const { return cy - 0.5 * h; }
    double y1() const { return cy + 0.5 * h; }
    double area() const { return w * h; }

    static CenterBox from_corners(double x0, double y0, double x1, double y1)
    {
        return {0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0, y1 - y0};
    }

    bool operator==(const CenterBox &) const = default;
};

struct DetectionBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    Category category = Category::Text;
    double confidence = 1.0;

    CenterBox geometry() const { return {cx, cy, w, h}; }

    bool operator==(const DetectionBox &) const = default;
};

/// Intersection over union; 0 when the union is empty.
double iou(const CenterBox &a, const CenterBox &b);
inline double iou(const DetectionBox &a, const DetectionBox &b) { return iou(a.geometry(), b.geometry()); }

/// Clips to [0, width] x [0, height]; returns false if nothing is left.
bool clip_to_canvas(CenterBox &box, double width, double height);

// Wire form: {cx, cy, w, h, category, conf}.
nlohmann::json to_json(const DetectionBox &box);
DetectionBox detection_box_from_json(const nlohmann::json &j);

} // namespace sketchwatch::detector
