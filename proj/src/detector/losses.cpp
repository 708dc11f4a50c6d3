// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/detector/losses.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sketchwatch::detector {

void LossConfig::validate() const
{
    if (!(alpha > 0.0))
        throw Error(Errc::invalid_argument, "loss alpha must be positive");
    if (focal_gamma < 0.0 || !(focal_alpha > 0.0))
        throw Error(Errc::invalid_argument, "focal parameters out of range");
    if (!(match_iou_positive > 0.0 && match_iou_positive <= 1.0))
        throw Error(Errc::invalid_argument, "match_iou_positive must be in (0, 1]");
    if (!(mining_iou_low >= 0.0 && mining_iou_low <= mining_iou_high && mining_iou_high <= 1.0))
        throw Error(Errc::invalid_argument, "mining band must lie within [0, 1]");
}

nlohmann::json LossConfig::to_json() const
{
    return {{"alpha", alpha},
            {"focal_gamma", focal_gamma},
            {"focal_alpha", focal_alpha},
            {"match_iou_positive", match_iou_positive},
            {"mining_band", {mining_iou_low, mining_iou_high}}};
}

LossConfig LossConfig::from_json(const nlohmann::json &j)
{
    LossConfig c;
    try {
        c.alpha = j.value("alpha", c.alpha);
        c.focal_gamma = j.value("focal_gamma", c.focal_gamma);
        c.focal_alpha = j.value("focal_alpha", c.focal_alpha);
        c.match_iou_positive = j.value("match_iou_positive", c.match_iou_positive);
        if (j.contains("mining_band")) {
            c.mining_iou_low = j["mining_band"].at(0).get<double>();
            c.mining_iou_high = j["mining_band"].at(1).get<double>();
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("bad loss config: ") + e.what());
    }
    c.validate();
    return c;
}

Offsets encode(const CenterBox &box, const CenterBox &anchor)
{
    return {(box.cx - anchor.cx) / anchor.w, (box.cy - anchor.cy) / anchor.h, std::log(box.w / anchor.w),
            std::log(box.h / anchor.h)};
}

CenterBox decode(const Offsets &t, const CenterBox &anchor)
{
    return {anchor.cx + t[0] * anchor.w, anchor.cy + t[1] * anchor.h, anchor.w * std::exp(t[2]),
            anchor.h * std::exp(t[3])};
}

double diou_loss(const CenterBox &pred, const CenterBox &gt)
{
    std::array<double, 4> unused{};
    return diou_loss(pred, gt, unused);
}

double diou_loss(const CenterBox &pred, const CenterBox &gt, std::array<double, 4> &grad)
{
    const double px0 = pred.x0(), px1 = pred.x1(), py0 = pred.y0(), py1 = pred.y1();
    const double gx0 = gt.x0(), gx1 = gt.x1(), gy0 = gt.y0(), gy1 = gt.y1();

    // Gradients are accumulated in corner form (x0, x1, y0, y1) and converted at the end.
    double d_x0 = 0.0, d_x1 = 0.0, d_y0 = 0.0, d_y1 = 0.0, d_cx = 0.0, d_cy = 0.0, d_w = 0.0, d_h = 0.0;

    const double iw = std::min(px1, gx1) - std::max(px0, gx0);
    const double ih = std::min(py1, gy1) - std::max(py0, gy0);
    const bool overlap = iw > 0.0 && ih > 0.0;
    const double inter = overlap ? iw * ih : 0.0;
    const double uni = (px1 - px0) * (py1 - py0) + (gx1 - gx0) * (gy1 - gy0) - inter;
    const double iou_v = uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;

    if (uni > 0.0) {
        // d(-IoU)/dI and d(-IoU)/d(pred area)
        const double dl_dinter = -(uni + inter) / (uni * uni);
        const double dl_darea = inter / (uni * uni);
        d_w += dl_darea * pred.h;
        d_h += dl_darea * pred.w;
        if (overlap) {
            if (px1 < gx1)
                d_x1 += dl_dinter * ih;
            if (px0 > gx0)
                d_x0 -= dl_dinter * ih;
            if (py1 < gy1)
                d_y1 += dl_dinter * iw;
            if (py0 > gy0)
                d_y0 -= dl_dinter * iw;
        }
    }

    const double dx = pred.cx - gt.cx;
    const double dy = pred.cy - gt.cy;
    const double rho2 = dx * dx + dy * dy;
    const double cw = std::max(px1, gx1) - std::min(px0, gx0);
    const double ch = std::max(py1, gy1) - std::min(py0, gy0);
    const double c2 = cw * cw + ch * ch;

    double penalty = 0.0;
    if (c2 > 0.0) {
        penalty = rho2 / c2;
        d_cx += 2.0 * dx / c2;
        d_cy += 2.0 * dy / c2;
        const double dl_dc2 = -rho2 / (c2 * c2);
        if (px1 > gx1)
            d_x1 += dl_dc2 * 2.0 * cw;
        if (px0 < gx0)
            d_x0 -= dl_dc2 * 2.0 * cw;
        if (py1 > gy1)
            d_y1 += dl_dc2 * 2.0 * ch;
        if (py0 < gy0)
            d_y0 -= dl_dc2 * 2.0 * ch;
    }

    grad[0] = d_cx + d_x0 + d_x1;
    grad[1] = d_cy + d_y0 + d_y1;
    grad[2] = d_w + 0.5 * (d_x1 - d_x0);
    grad[3] = d_h + 0.5 * (d_y1 - d_y0);
    return std::max(0.0, 1.0 - iou_v + penalty);
}

namespace {

constexpr double kMinProb = 1e-12;

} // namespace

double focal_loss(double p_t, double gamma, double alpha)
{
    const double p = std::clamp(p_t, kMinProb, 1.0);
    return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
}

double focal_loss_softmax(std::span<const double> probs, int target, double gamma, double alpha,
                          std::span<double> dlogits)
{
    const double p = std::clamp(probs[static_cast<std::size_t>(target)], kMinProb, 1.0);
    const double q = 1.0 - p;
    const double log_p = std::log(p);
    // p * dL/dp; the softmax Jacobian contributes (delta_tk - p_k).
    const double ramp = gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0) * p * log_p;
    const double p_dl_dp = -alpha * (std::pow(q, gamma) - ramp);
    for (std::size_t k = 0; k < probs.size(); ++k) {
        const double delta = static_cast<int>(k) == target ? 1.0 : 0.0;
        dlogits[k] += p_dl_dp * (delta - probs[k]);
    }
    return -alpha * std::pow(q, gamma) * log_p;
}

AnchorTargets match_anchors(std::span<const Anchor> anchors, std::span<const DetectionBox> gts,
                            const LossConfig &cfg)
{
    const std::size_t n = anchors.size();
    AnchorTargets t;
    t.labels.assign(n, kBackground);
    t.gt_index.assign(n, -1);
    t.offsets.assign(n, Offsets{});
    if (gts.empty())
        return t;

    std::vector<double> overlaps(n * gts.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t g = 0; g < gts.size(); ++g)
            overlaps[i * gts.size() + g] = iou(anchors[i].box, gts[g].geometry());

    for (std::size_t i = 0; i < n; ++i) {
        double best = -1.0;
        int best_g = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (overlaps[i * gts.size() + g] > best) {
                best = overlaps[i * gts.size() + g];
                best_g = static_cast<int>(g);
            }
        }
        if (best >= cfg.match_iou_positive)
            t.gt_index[i] = best_g;
    }

    // Forced claims; claim_iou tracks the IoU of the current claimant.
    std::vector<double> claim_iou(n, -1.0);
    for (std::size_t g = 0; g < gts.size(); ++g) {
        double best = 0.0;
        std::size_t best_i = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (overlaps[i * gts.size() + g] > best) {
                best = overlaps[i * gts.size() + g];
                best_i = i;
            }
        }
        if (best_i == n)
            continue;
        if (best > claim_iou[best_i]) {
            claim_iou[best_i] = best;
            t.gt_index[best_i] = static_cast<int>(g);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (t.gt_index[i] < 0)
            continue;
        const auto &gt = gts[static_cast<std::size_t>(t.gt_index[i])];
        t.labels[i] = static_cast<int>(gt.category);
        t.offsets[i] = encode(gt.geometry(), anchors[i].box);
        ++t.positives;
    }
    return t;
}

namespace {

LossTerms total_loss_impl(const LossInput &in, const LossConfig &cfg, double *dlogits, double *doffsets)
{
    const auto &targets = *in.targets;
    const std::size_t n = in.anchors.size();
    if (in.probs.size() != n * kNumClasses || in.offsets.size() != n * 4 || targets.labels.size() != n)
        throw Error(Errc::dimension, "loss inputs disagree on the anchor count");

    LossTerms terms;
    terms.anchors = n;
    terms.positives = targets.positives;

    const std::size_t cls_count = n + in.hard_negatives.size();
    const double cls_scale = cfg.alpha / static_cast<double>(cls_count);
    std::array<double, kNumClasses> row_grad{};

    auto add_cls = [&](std::size_t i, int label) {
        row_grad.fill(0.0);
        const double l = focal_loss_softmax(in.probs.subspan(i * kNumClasses, kNumClasses), label, cfg.focal_gamma,
                                            cfg.focal_alpha, row_grad);
        terms.classification += l;
        if (dlogits)
            for (int k = 0; k < kNumClasses; ++k)
                dlogits[i * kNumClasses + k] += cls_scale * row_grad[k];
    };
    for (std::size_t i = 0; i < n; ++i)
        add_cls(i, targets.labels[i]);
    for (std::size_t i : in.hard_negatives) {
        if (i >= n)
            throw Error(Errc::dimension, "hard negative index out of range");
        if (targets.labels[i] == kBackground)
            add_cls(i, kBackground);
    }
    terms.classification /= static_cast<double>(cls_count);

    if (targets.positives > 0) {
        const double loc_scale = 1.0 / static_cast<double>(targets.positives);
        for (std::size_t i = 0; i < n; ++i) {
            if (targets.labels[i] == kBackground)
                continue;
            const auto &anchor = in.anchors[i].box;
            const Offsets pred_t{in.offsets[i * 4], in.offsets[i * 4 + 1], in.offsets[i * 4 + 2], in.offsets[i * 4 + 3]};
            const CenterBox pred = decode(pred_t, anchor);
            const CenterBox gt = decode(targets.offsets[i], anchor);
            std::array<double, 4> g{};
            terms.localization += diou_loss(pred, gt, g);
            if (doffsets) {
                doffsets[i * 4 + 0] += loc_scale * g[0] * anchor.w;
                doffsets[i * 4 + 1] += loc_scale * g[1] * anchor.h;
                doffsets[i * 4 + 2] += loc_scale * g[2] * pred.w;
                doffsets[i * 4 + 3] += loc_scale * g[3] * pred.h;
            }
        }
        terms.localization *= loc_scale;
    }

    terms.total = cfg.alpha * terms.classification + terms.localization;
    return terms;
}

} // namespace

LossTerms total_loss(const LossInput &in, const LossConfig &cfg)
{
    return total_loss_impl(in, cfg, nullptr, nullptr);
}

LossTerms total_loss(const LossInput &in, const LossConfig &cfg, std::span<double> dlogits, std::span<double> doffsets)
{
    const std::size_t n = in.anchors.size();
    if (dlogits.size() != n * kNumClasses || doffsets.size() != n * 4)
        throw Error(Errc::dimension, "gradient buffers disagree on the anchor count");
    return total_loss_impl(in, cfg, dlogits.data(), doffsets.data());
}

} // namespace sketchwatch::detector
