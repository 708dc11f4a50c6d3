// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/detector/detector.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <thread>

namespace sketchwatch::detector {

std::vector<double> to_input(const strokes::RenderedCanvas &canvas)
{
    std::vector<double> x(canvas.pixels.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = canvas.pixels[i] ? 1.0 : 0.0;
    return x;
}

NetDetector::NetDetector(Network net, NmsConfig nms, std::chrono::milliseconds budget)
    : net_(std::move(net)), nms_(nms), budget_(budget), anchors_(generate_anchors(net_.config()))
{
    nms_.validate();
}

std::vector<DetectionBox> NetDetector::detect(const strokes::RenderedCanvas &canvas) const
{
    const int s = net_.config().input_size;
    if (canvas.width != s || canvas.height != s)
        throw Error(Errc::dimension, "canvas is " + std::to_string(canvas.width) + "x" +
                                         std::to_string(canvas.height) + ", detector expects " + std::to_string(s));
    const auto start = std::chrono::steady_clock::now();
    const Prediction p = net_.forward(to_input(canvas));
    auto boxes = decode_and_nms(p.probs, p.offsets, anchors_, nms_, s, s);
    if (budget_.count() > 0 && std::chrono::steady_clock::now() - start > budget_)
        throw Error(Errc::timeout, "inference exceeded " + std::to_string(budget_.count()) + " ms");
    return boxes;
}

StubDetector::StubDetector(std::vector<DetectionBox> boxes, std::chrono::microseconds latency)
    : boxes_(std::move(boxes)), latency_(latency)
{
}

std::vector<DetectionBox> StubDetector::detect(const strokes::RenderedCanvas &) const
{
    if (latency_.count() > 0)
        std::this_thread::sleep_for(latency_);
    return boxes_;
}

InkBoxDetector::InkBoxDetector(Category category, int merge_gap, double confidence)
    : category_(category), merge_gap_(merge_gap), confidence_(confidence)
{
    if (category == Category::Background)
        throw Error(Errc::invalid_argument, "detector cannot emit Background");
    if (merge_gap < 0)
        throw Error(Errc::invalid_argument, "merge_gap must be non-negative");
}

std::vector<DetectionBox> InkBoxDetector::detect(const strokes::RenderedCanvas &canvas) const
{
    const int w = canvas.width, h = canvas.height;
    std::vector<int> label(canvas.pixels.size(), -1);
    struct Extent {
        int x0, y0, x1, y1;
    };
    std::vector<Extent> regions;
    std::vector<int> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int start = y * w + x;
            if (!canvas.pixels[static_cast<std::size_t>(start)] || label[static_cast<std::size_t>(start)] >= 0)
                continue;
            const int id = static_cast<int>(regions.size());
            Extent e{x, y, x, y};
            stack.push_back(start);
            label[static_cast<std::size_t>(start)] = id;
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int px = p % w, py = p / w;
                e.x0 = std::min(e.x0, px);
                e.x1 = std::max(e.x1, px);
                e.y0 = std::min(e.y0, py);
                e.y1 = std::max(e.y1, py);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = px + dx, ny = py + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                            continue;
                        const int q = ny * w + nx;
                        if (canvas.pixels[static_cast<std::size_t>(q)] && label[static_cast<std::size_t>(q)] < 0) {
                            label[static_cast<std::size_t>(q)] = id;
                            stack.push_back(q);
                        }
                    }
            }
            regions.push_back(e);
        }
    }
    // Merge extents that come within merge_gap of each other until nothing changes.
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < regions.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < regions.size(); ++j) {
                const auto &a = regions[i];
                const auto &b = regions[j];
                const int gx = std::max({0, b.x0 - a.x1, a.x0 - b.x1});
                const int gy = std::max({0, b.y0 - a.y1, a.y0 - b.y1});
                if (gx <= merge_gap_ && gy <= merge_gap_) {
                    regions[i] = {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
                                  std::max(a.y1, b.y1)};
                    regions.erase(regions.begin() + static_cast<std::ptrdiff_t>(j));
                    changed = true;
                    break;
                }
            }
        }
    }
    std::vector<DetectionBox> out;
    for (const auto &r : regions) {
        const auto g = CenterBox::from_corners(r.x0, r.y0, r.x1 + 1, r.y1 + 1);
        out.push_back({g.cx, g.cy, g.w, g.h, category_, confidence_});
    }
    return out;
}

strokes::RenderedCanvas downsample(const strokes::RenderedCanvas &canvas, int size)
{
    if (size <= 0)
        throw Error(Errc::invalid_argument, "downsample size must be positive");
    strokes::RenderedCanvas small;
    small.session_id = canvas.session_id;
    small.snapshot_seq = canvas.snapshot_seq;
    small.width = small.height = size;
    small.pixels.assign(static_cast<std::size_t>(size) * size, 0);
    const double sx = static_cast<double>(canvas.width) / size;
    const double sy = static_cast<double>(canvas.height) / size;
    for (int y = 0; y < canvas.height; ++y)
        for (int x = 0; x < canvas.width; ++x)
            if (canvas.at(x, y)) {
                const int tx = std::min(size - 1, static_cast<int>(x / sx));
                const int ty = std::min(size - 1, static_cast<int>(y / sy));
                small.pixels[static_cast<std::size_t>(ty) * size + tx] = 1;
            }
    return small;
}

ResampledDetector::ResampledDetector(std::shared_ptr<const Detector> inner, int input_size)
    : inner_(std::move(inner)), input_size_(input_size)
{
    if (!inner_ || input_size_ <= 0)
        throw Error(Errc::invalid_argument, "resampled detector needs a detector and a positive size");
}

std::vector<DetectionBox> ResampledDetector::detect(const strokes::RenderedCanvas &canvas) const
{
    if (canvas.width == input_size_ && canvas.height == input_size_)
        return inner_->detect(canvas);
    auto boxes = inner_->detect(downsample(canvas, input_size_));
    const double sx = static_cast<double>(canvas.width) / input_size_;
    const double sy = static_cast<double>(canvas.height) / input_size_;
    for (auto &b : boxes) {
        b.cx *= sx;
        b.w *= sx;
        b.cy *= sy;
        b.h *= sy;
    }
    return boxes;
}

} // namespace sketchwatch::detector
