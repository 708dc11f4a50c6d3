// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/anchors.hpp"
#include "sketchwatch/detector/losses.hpp"
#include "sketchwatch/detector/network.hpp"
#include "sketchwatch/detector/nms.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace sketchwatch::detector {

enum class TrainMode {
    TextOnly,   // Text boxes only, false positives near the IoU boundary fed back as negatives
    Multiclass, // all categories, images resampled so categories are drawn equally often
};

struct TrainConfig {
    int batch_size = 8;
    int epochs = 50;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    TrainMode mode = TrainMode::TextOnly;
    std::uint64_t seed = 1;
    LossConfig loss;
    NmsConfig mining_nms; // how false positives are produced for mining

    void validate() const;
    nlohmann::json to_json() const;
    /// Missing keys keep their defaults. Throws Error(malformed).
    static TrainConfig from_json(const nlohmann::json &j);
};

std::string_view to_string(TrainMode m);
TrainMode train_mode_from_string(std::string_view s);

struct TrainSample {
    std::vector<double> image; // input_size^2 values in [0, 1]
    std::vector<DetectionBox> boxes;
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    std::size_t steps = 0;
    std::size_t hard_negatives = 0; // mined anchors used this epoch
};

class Adam {
public:
    Adam(std::size_t size, double lr, double beta1, double beta2, double epsilon);
    void step(std::span<double> params, std::span<const double> grad);
    long steps() const { return t_; }

private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

/// Per-image sampling weights giving every category the same expected number of
/// draws. An image's weight averages 1 / (count of images containing c) over its
/// categories; images without boxes form their own group.
std::vector<double> class_balanced_weights(std::span<const std::vector<Category>> image_categories);

/// Indices of anchors from `candidates` that are false positives whose best IoU with
/// any ground truth lies inside [low, high].
std::vector<std::size_t> mine_hard_negatives(std::span<const Candidate> candidates,
                                             std::span<const DetectionBox> gts, double low, double high,
                                             double match_iou);

class Trainer {
public:
    Trainer(Network &net, TrainConfig cfg);

    /// One optimizer step on `indices` of `data`; returns the mean loss over the batch.
    double step(std::span<const TrainSample> data, std::span<const std::size_t> indices);

    EpochLog run_epoch(std::span<const TrainSample> data);

    /// Runs cfg.epochs epochs. `on_epoch` may return false to stop early.
    std::vector<EpochLog> train(std::span<const TrainSample> data,
                                const std::function<bool(const EpochLog &)> &on_epoch = {});

    const std::vector<Anchor> &anchors() const { return anchors_; }

private:
    const AnchorTargets &targets_for(std::span<const TrainSample> data, std::size_t i);

    Network &net_;
    TrainConfig cfg_;
    std::vector<Anchor> anchors_;
    Adam adam_;
    std::mt19937_64 rng_;
    int epoch_ = 0;
    const TrainSample *targets_base_ = nullptr;
    std::vector<AnchorTargets> targets_;
    std::vector<std::vector<std::size_t>> mined_;      // used in the current epoch
    std::vector<std::vector<std::size_t>> next_mined_; // collected for the next one
    std::vector<double> grad_;
    ForwardCache cache_;
};

} // namespace sketchwatch::detector
