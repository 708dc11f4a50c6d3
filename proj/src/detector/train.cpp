// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/detector/train.hpp"

#include "sketchwatch/common/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace sketchwatch::detector {

void TrainConfig::validate() const
{
    if (batch_size < 1)
        throw Error(Errc::invalid_argument, "batch_size must be at least 1");
    if (epochs < 1)
        throw Error(Errc::invalid_argument, "epochs must be at least 1");
    if (!(learning_rate > 0.0))
        throw Error(Errc::invalid_argument, "learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
        throw Error(Errc::invalid_argument, "moment decay rates must be in [0, 1)");
    loss.validate();
    mining_nms.validate();
}

std::string_view to_string(TrainMode m) { return m == TrainMode::TextOnly ? "text_only" : "multiclass"; }

TrainMode train_mode_from_string(std::string_view s)
{
    if (s == "text_only")
        return TrainMode::TextOnly;
    if (s == "multiclass")
        return TrainMode::Multiclass;
    throw Error(Errc::malformed, "train mode must be text_only or multiclass");
}

nlohmann::json TrainConfig::to_json() const
{
    return {{"batch_size", batch_size},
            {"epochs", epochs},
            {"learning_rate", learning_rate},
            {"beta1", beta1},
            {"beta2", beta2},
            {"epsilon", epsilon},
            {"mode", to_string(mode)},
            {"seed", seed},
            {"loss", loss.to_json()},
            {"mining_score_threshold", mining_nms.score_threshold},
            {"mining_nms_iou", mining_nms.iou_threshold}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json &j)
{
    if (!j.is_object())
        throw Error(Errc::malformed, "train config must be an object");
    TrainConfig c;
    try {
        c.batch_size = j.value("batch_size", c.batch_size);
        c.epochs = j.value("epochs", c.epochs);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.beta1 = j.value("beta1", c.beta1);
        c.beta2 = j.value("beta2", c.beta2);
        c.epsilon = j.value("epsilon", c.epsilon);
        if (j.contains("mode"))
            c.mode = train_mode_from_string(j["mode"].get<std::string>());
        c.seed = j.value("seed", c.seed);
        if (j.contains("loss"))
            c.loss = LossConfig::from_json(j["loss"]);
        c.mining_nms.score_threshold = j.value("mining_score_threshold", c.mining_nms.score_threshold);
        c.mining_nms.iou_threshold = j.value("mining_nms_iou", c.mining_nms.iou_threshold);
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("train config: ") + e.what());
    }
    return c;
}

Adam::Adam(std::size_t size, double lr, double beta1, double beta2, double epsilon)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(epsilon), m_(size, 0.0), v_(size, 0.0)
{
}

void Adam::step(std::span<double> params, std::span<const double> grad)
{
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw Error(Errc::dimension, "optimizer state does not match the parameter count");
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    const auto n = static_cast<Eigen::Index>(params.size());
    Eigen::Map<Eigen::ArrayXd> p(params.data(), n), m(m_.data(), n), v(v_.data(), n);
    Eigen::Map<const Eigen::ArrayXd> g(grad.data(), n);
    m = b1_ * m + (1.0 - b1_) * g;
    v = b2_ * v + (1.0 - b2_) * g.square();
    p -= lr_ * (m / c1) / ((v / c2).sqrt() + eps_);
}

std::vector<double> class_balanced_weights(std::span<const std::vector<Category>> image_categories)
{
    // -1 stands for "no boxes".
    std::map<int, std::size_t> counts;
    std::vector<std::vector<int>> groups(image_categories.size());
    for (std::size_t i = 0; i < image_categories.size(); ++i) {
        for (Category c : image_categories[i])
            groups[i].push_back(static_cast<int>(c));
        std::sort(groups[i].begin(), groups[i].end());
        groups[i].erase(std::unique(groups[i].begin(), groups[i].end()), groups[i].end());
        if (groups[i].empty())
            groups[i].push_back(-1);
        for (int g : groups[i])
            ++counts[g];
    }
    std::vector<double> w(image_categories.size(), 0.0);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (int g : groups[i])
            w[i] += 1.0 / static_cast<double>(counts[g]);
        w[i] /= static_cast<double>(groups[i].size());
    }
    return w;
}

std::vector<std::size_t> mine_hard_negatives(std::span<const Candidate> candidates,
                                             std::span<const DetectionBox> gts, double low, double high,
                                             double match_iou)
{
    std::vector<std::size_t> out;
    for (const auto &c : candidates) {
        double best_any = 0.0;
        bool matched = false;
        for (const auto &g : gts) {
            const double v = iou(c.box, g);
            best_any = std::max(best_any, v);
            if (g.category == c.box.category && v >= match_iou)
                matched = true;
        }
        if (!matched && best_any >= low && best_any <= high)
            out.push_back(c.anchor_index);
    }
    return out;
}

Trainer::Trainer(Network &net, TrainConfig cfg)
    : net_(net), cfg_(std::move(cfg)), anchors_(generate_anchors(net.config())),
      adam_(net.parameter_count(), cfg_.learning_rate, cfg_.beta1, cfg_.beta2, cfg_.epsilon), rng_(cfg_.seed),
      grad_(net.parameter_count(), 0.0)
{
    cfg_.validate();
}

const AnchorTargets &Trainer::targets_for(std::span<const TrainSample> data, std::size_t i)
{
    if (targets_base_ != data.data() || targets_.size() != data.size()) {
        targets_base_ = data.data();
        targets_.assign(data.size(), AnchorTargets{});
        mined_.assign(data.size(), {});
        next_mined_.assign(data.size(), {});
    }
    auto &t = targets_[i];
    if (t.labels.empty()) {
        std::vector<DetectionBox> boxes;
        for (const auto &b : data[i].boxes)
            if (cfg_.mode == TrainMode::Multiclass || b.category == Category::Text)
                boxes.push_back(b);
        t = match_anchors(anchors_, boxes, cfg_.loss);
    }
    return t;
}

double Trainer::step(std::span<const TrainSample> data, std::span<const std::size_t> indices)
{
    if (indices.empty())
        throw Error(Errc::invalid_argument, "empty batch");
    const auto &ncfg = net_.config();
    const std::size_t n = anchors_.size();
    std::fill(grad_.begin(), grad_.end(), 0.0);
    std::vector<double> dlogits(n * kNumClasses), doffsets(n * 4);
    double total = 0.0;
    for (std::size_t idx : indices) {
        const auto &sample = data[idx];
        const auto &targets = targets_for(data, idx);
        const Prediction pred = net_.forward(sample.image, cache_);
        std::fill(dlogits.begin(), dlogits.end(), 0.0);
        std::fill(doffsets.begin(), doffsets.end(), 0.0);
        LossInput in{pred.probs, pred.offsets, &targets, anchors_, {}};
        if (cfg_.mode == TrainMode::TextOnly)
            in.hard_negatives = mined_[idx];
        const LossTerms terms = total_loss(in, cfg_.loss, dlogits, doffsets);
        if (!std::isfinite(terms.total))
            throw Error(Errc::non_finite, "loss became non-finite at epoch " + std::to_string(epoch_));
        total += terms.total;
        net_.backward(cache_, dlogits, doffsets, grad_);

        if (cfg_.mode == TrainMode::TextOnly) {
            std::vector<DetectionBox> text;
            for (const auto &b : sample.boxes)
                if (b.category == Category::Text)
                    text.push_back(b);
            auto cands = nms(decode_candidates(pred.probs, pred.offsets, anchors_, cfg_.mining_nms.score_threshold,
                                               ncfg.input_size, ncfg.input_size),
                             cfg_.mining_nms.iou_threshold);
            std::erase_if(cands, [](const Candidate &c) { return c.box.category != Category::Text; });
            auto mined = mine_hard_negatives(cands, text, cfg_.loss.mining_iou_low, cfg_.loss.mining_iou_high,
                                             cfg_.loss.match_iou_positive);
            auto &dst = next_mined_[idx];
            dst.insert(dst.end(), mined.begin(), mined.end());
            std::sort(dst.begin(), dst.end());
            dst.erase(std::unique(dst.begin(), dst.end()), dst.end());
        }
    }
    const double scale = 1.0 / static_cast<double>(indices.size());
    for (double &g : grad_)
        g *= scale;
    adam_.step(net_.parameters(), grad_);
    return total * scale;
}

EpochLog Trainer::run_epoch(std::span<const TrainSample> data)
{
    if (data.empty())
        throw Error(Errc::invalid_argument, "training set is empty");
    targets_for(data, 0);
    ++epoch_;
    mined_.swap(next_mined_);
    for (auto &m : next_mined_)
        m.clear();

    std::vector<std::size_t> order(data.size());
    if (cfg_.mode == TrainMode::Multiclass) {
        std::vector<std::vector<Category>> cats(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            for (const auto &b : data[i].boxes)
                cats[i].push_back(b.category);
        const auto w = class_balanced_weights(cats);
        std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
        for (auto &o : order)
            o = pick(rng_);
    } else {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng_);
    }

    EpochLog log;
    log.epoch = epoch_;
    for (const auto &m : mined_)
        log.hard_negatives += m.size();
    double sum = 0.0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg_.batch_size)) {
        const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(cfg_.batch_size));
        sum += step(data, std::span(order).subspan(at, end - at));
        ++log.steps;
    }
    log.mean_loss = sum / static_cast<double>(log.steps);
    return log;
}

std::vector<EpochLog> Trainer::train(std::span<const TrainSample> data,
                                     const std::function<bool(const EpochLog &)> &on_epoch)
{
    std::vector<EpochLog> logs;
    for (int e = 0; e < cfg_.epochs; ++e) {
        logs.push_back(run_epoch(data));
        if (on_epoch && !on_epoch(logs.back()))
            break;
    }
    return logs;
}

} // namespace sketchwatch::detector
