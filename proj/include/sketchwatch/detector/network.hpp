// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/config.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sketchwatch::detector {

/// Raw per-anchor output, in generate_anchors order.
struct Prediction {
    std::vector<double> logits;  // N x kNumClasses
    std::vector<double> probs;   // softmax of logits
    std::vector<double> offsets; // N x 4
    std::size_t anchors() const { return offsets.size() / 4; }
};

/// Named slice of the flat parameter vector.
struct TensorInfo {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t count = 0;
};

struct ForwardCache;

/// Feature extractor, extra downsampling blocks and per-scale prediction heads.
/// Parameters live in one flat vector; gradients use the same layout.
class Network {
public:
    explicit Network(NetConfig cfg);
    ~Network();
    Network(const Network &);
    Network &operator=(const Network &);
    Network(Network &&) noexcept;
    Network &operator=(Network &&) noexcept;

    const NetConfig &config() const { return cfg_; }
    std::size_t parameter_count() const { return params_.size(); }
    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    const std::vector<TensorInfo> &tensors() const { return tensors_; }

    /// He-style random weights; class biases start every anchor at `background_prior`
    /// probability of Background (0 leaves all class biases at zero).
    void init(std::uint64_t seed, double background_prior = 0.99);

    /// `image` is input_size^2 values, row-major. Thread-safe.
    Prediction forward(std::span<const double> image) const;

    /// Forward pass that keeps what backward needs in `cache`.
    Prediction forward(std::span<const double> image, ForwardCache &cache) const;

    /// Adds d(loss)/d(parameters) to `grad` given loss gradients w.r.t. the logits and
    /// offsets of the forward pass recorded in `cache`.
    void backward(const ForwardCache &cache, std::span<const double> dlogits, std::span<const double> doffsets,
                  std::span<double> grad) const;

    std::size_t anchor_count() const { return anchor_count_; }

    struct Layer {
        std::string name;
        int cin = 0;
        int cout = 0;
        int kh = 1;
        int kw = 1;
        int stride = 1;
        bool depthwise = true;  // false for the plain 1x1 output projection
        bool activation = true; // mish after the pointwise step
        std::size_t dw = 0;     // parameter offsets
        std::size_t pw = 0;
        std::size_t bias = 0;
    };
    struct Segment {
        int channels_in = 0;
        std::vector<int> reduce; // layer ids, one per dense layer
        std::vector<int> grow;
        int transition = 0;
    };

private:
    int add_layer(std::string name, int cin, int cout, int kh, int kw, int stride, bool depthwise = true,
                  bool activation = true);
    Prediction run(std::span<const double> image, ForwardCache *cache) const;

    NetConfig cfg_;
    std::vector<Layer> layers_;
    std::vector<double> params_;
    std::vector<TensorInfo> tensors_;
    std::vector<int> stem_;
    std::vector<Segment> segments_;
    std::vector<std::pair<int, int>> extras_;
    std::vector<std::pair<int, int>> heads_;
    std::size_t anchor_count_ = 0;
};

/// Activations recorded by a caching forward pass. Reusable across calls.
struct ForwardCache {
    ForwardCache();
    ~ForwardCache();
    ForwardCache(ForwardCache &&) noexcept;
    ForwardCache &operator=(ForwardCache &&) noexcept;

    struct Impl;
    std::unique_ptr<Impl> impl;
};

/// Softmax over each row of `kNumClasses` logits.
void softmax_rows(std::span<const double> logits, std::span<double> probs);

} // namespace sketchwatch::detector
