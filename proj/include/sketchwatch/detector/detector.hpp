// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/anchors.hpp"
#include "sketchwatch/detector/box.hpp"
#include "sketchwatch/detector/network.hpp"
#include "sketchwatch/detector/nms.hpp"
#include "sketchwatch/strokes/stroke.hpp"

#include <chrono>
#include <memory>
#include <vector>

namespace sketchwatch::detector {

/// Turns a rendered canvas into atypical-content boxes. Implementations must be safe
/// to call from several threads at once.
class Detector {
public:
    virtual ~Detector() = default;
    virtual std::vector<DetectionBox> detect(const strokes::RenderedCanvas &canvas) const = 0;
};

/// Canvas pixels as network input (ink = 1).
std::vector<double> to_input(const strokes::RenderedCanvas &canvas);

class NetDetector : public Detector {
public:
    /// A zero budget disables the time check.
    NetDetector(Network net, NmsConfig nms, std::chrono::milliseconds budget = std::chrono::milliseconds{0});

    /// Throws Error(dimension) unless the canvas is exactly input_size square, and
    /// Error(timeout) when inference overruns the budget.
    std::vector<DetectionBox> detect(const strokes::RenderedCanvas &canvas) const override;

    const Network &network() const { return net_; }
    const std::vector<Anchor> &anchors() const { return anchors_; }

private:
    Network net_;
    NmsConfig nms_;
    std::chrono::milliseconds budget_;
    std::vector<Anchor> anchors_;
};

/// Fixed answer after a fixed delay. Used to exercise the serving path.
class StubDetector : public Detector {
public:
    explicit StubDetector(std::vector<DetectionBox> boxes = {},
                          std::chrono::microseconds latency = std::chrono::microseconds{1000});
    std::vector<DetectionBox> detect(const strokes::RenderedCanvas &canvas) const override;

private:
    std::vector<DetectionBox> boxes_;
    std::chrono::microseconds latency_;
};

/// Reports the bounding box of each 8-connected ink region (after merging regions
/// closer than `merge_gap` pixels) with a fixed category. Blank canvases give no boxes.
class InkBoxDetector : public Detector {
public:
    explicit InkBoxDetector(Category category = Category::Text, int merge_gap = 8, double confidence = 0.99);
    std::vector<DetectionBox> detect(const strokes::RenderedCanvas &canvas) const override;

private:
    Category category_;
    int merge_gap_;
    double confidence_;
};

/// Max-pools a canvas down to size x size: an output pixel is ink when any source
/// pixel mapping to it is.
strokes::RenderedCanvas downsample(const strokes::RenderedCanvas &canvas, int size);

/// Runs a detector trained at a smaller input size on full-size canvases: the
/// canvas is downsampled to the network input and boxes are scaled back.
class ResampledDetector : public Detector {
public:
    ResampledDetector(std::shared_ptr<const Detector> inner, int input_size);
    std::vector<DetectionBox> detect(const strokes::RenderedCanvas &canvas) const override;

private:
    std::shared_ptr<const Detector> inner_;
    int input_size_;
};

} // namespace sketchwatch::detector
