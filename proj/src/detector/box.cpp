// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/detector/box.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <string>

namespace sketchwatch::detector {

std::string_view to_string(Category c)
{
    switch (c) {
    case Category::Text: return "text";
    case Category::Number: return "number";
    case Category::Circle: return "circle";
    case Category::Icon: return "icon";
    case Category::Background: return "background";
    }
    return "unknown";
}

Category category_from_string(std::string_view s)
{
    for (auto c : {Category::Text, Category::Number, Category::Circle, Category::Icon, Category::Background})
        if (to_string(c) == s)
            return c;
    throw Error(Errc::malformed, "unknown category '" + std::string(s) + "'");
}

double iou(const CenterBox &a, const CenterBox &b)
{
    const double iw = std::min(a.x1(), b.x1()) - std::max(a.x0(), b.x0());
    const double ih = std::min(a.y1(), b.y1()) - std::max(a.y0(), b.y0());
    const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
    // Areas from the same corner arithmetic as the intersection, so iou(a, a) is exactly 1.
    const double area_a = (a.x1() - a.x0()) * (a.y1() - a.y0());
    const double area_b = (b.x1() - b.x0()) * (b.y1() - b.y0());
    const double uni = area_a + area_b - inter;
    return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

bool clip_to_canvas(CenterBox &box, double width, double height)
{
    const double x0 = std::clamp(box.x0(), 0.0, width);
    const double x1 = std::clamp(box.x1(), 0.0, width);
    const double y0 = std::clamp(box.y0(), 0.0, height);
    const double y1 = std::clamp(box.y1(), 0.0, height);
    if (x1 <= x0 || y1 <= y0)
        return false;
    box = CenterBox::from_corners(x0, y0, x1, y1);
    return true;
}

nlohmann::json to_json(const DetectionBox &box)
{
    return {{"cx", box.cx}, {"cy", box.cy}, {"w", box.w}, {"h", box.h}, {"category", to_string(box.category)},
            {"conf", box.confidence}};
}

DetectionBox detection_box_from_json(const nlohmann::json &j)
{
    try {
        DetectionBox b;
        b.cx = j.at("cx").get<double>();
        b.cy = j.at("cy").get<double>();
        b.w = j.at("w").get<double>();
        b.h = j.at("h").get<double>();
        b.category = category_from_string(j.at("category").get<std::string>());
        b.confidence = j.value("conf", 1.0);
        return b;
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("bad box: ") + e.what());
    }
}

} // namespace sketchwatch::detector
