// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/datakit/evaluate.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace sketchwatch::datakit {

double average_precision(std::span<const char> ranked_tp, std::size_t gt_count, Interpolation mode)
{
    if (gt_count == 0)
        return 0.0;
    const std::size_t n = ranked_tp.size();
    std::vector<double> precision(n), recall(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        tp += ranked_tp[i] ? 1 : 0;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(gt_count);
    }
    // Envelope: best precision at this recall or beyond.
    for (std::size_t i = n; i-- > 1;)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);

    if (mode == Interpolation::ElevenPoint) {
        double sum = 0.0;
        for (int k = 0; k <= 10; ++k) {
            const double r = k / 10.0;
            double best = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (recall[i] >= r - 1e-12)
                    best = std::max(best, precision[i]);
            sum += best;
        }
        return sum / 11.0;
    }
    double ap = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (recall[i] > prev) {
            ap += (recall[i] - prev) * precision[i];
            prev = recall[i];
        }
    }
    return ap;
}

EvalReport evaluate(std::span<const std::vector<DetectionBox>> predictions,
                    std::span<const std::vector<DetectionBox>> ground_truth, const EvalOptions &opts)
{
    if (predictions.size() != ground_truth.size())
        throw Error(Errc::dimension, "predictions and ground truth cover different image counts");
    std::set<Category> cats;
    for (const auto &img : ground_truth)
        for (const auto &b : img)
            cats.insert(b.category);
    std::set<Category> gt_cats = cats;
    for (const auto &img : predictions)
        for (const auto &b : img)
            cats.insert(b.category);

    EvalReport rep;
    for (Category c : cats) {
        struct Det {
            double conf;
            std::size_t image;
            std::size_t index;
        };
        std::vector<Det> dets;
        CategoryScore score;
        for (std::size_t img = 0; img < predictions.size(); ++img) {
            std::vector<Det> mine;
            for (std::size_t k = 0; k < predictions[img].size(); ++k)
                if (predictions[img][k].category == c)
                    mine.push_back({predictions[img][k].confidence, img, k});
            std::stable_sort(mine.begin(), mine.end(), [](const Det &a, const Det &b) { return a.conf > b.conf; });
            if (mine.size() > opts.max_detections)
                mine.resize(opts.max_detections);
            dets.insert(dets.end(), mine.begin(), mine.end());
            for (const auto &g : ground_truth[img])
                if (g.category == c)
                    ++score.gt;
        }
        std::sort(dets.begin(), dets.end(), [](const Det &a, const Det &b) {
            if (a.conf != b.conf)
                return a.conf > b.conf;
            if (a.image != b.image)
                return a.image < b.image;
            return a.index < b.index;
        });

        std::vector<std::vector<bool>> used(ground_truth.size());
        for (std::size_t img = 0; img < ground_truth.size(); ++img)
            used[img].assign(ground_truth[img].size(), false);
        std::vector<char> ranked_tp;
        for (const auto &d : dets) {
            const auto &p = predictions[d.image][d.index];
            const auto &gts = ground_truth[d.image];
            double best = -1.0;
            std::size_t arg = gts.size();
            for (std::size_t g = 0; g < gts.size(); ++g) {
                if (gts[g].category != c || used[d.image][g])
                    continue;
                const double v = detector::iou(p, gts[g]);
                if (v > best) {
                    best = v;
                    arg = g;
                }
            }
            const bool hit = arg < gts.size() && best >= opts.iou_threshold;
            if (hit)
                used[d.image][arg] = true;
            ranked_tp.push_back(hit ? 1 : 0);
            hit ? ++score.tp : ++score.fp;
        }
        score.fn = score.gt - score.tp;
        score.ap = average_precision(ranked_tp, score.gt, opts.interpolation);
        score.ar = score.gt ? static_cast<double>(score.tp) / static_cast<double>(score.gt) : 0.0;
        rep.tp += score.tp;
        rep.fp += score.fp;
        rep.fn += score.fn;
        rep.per_category[c] = score;
    }

    if (gt_cats.empty()) {
        const bool clean = rep.fp == 0;
        rep.map = rep.mar = clean ? 1.0 : 0.0;
        return rep;
    }
    for (Category c : gt_cats) {
        rep.map += rep.per_category[c].ap;
        rep.mar += rep.per_category[c].ar;
    }
    rep.map /= static_cast<double>(gt_cats.size());
    rep.mar /= static_cast<double>(gt_cats.size());
    return rep;
}

nlohmann::json EvalReport::to_json() const
{
    nlohmann::json j;
    j["mAP"] = map;
    j["mAR"] = mar;
    j["tp"] = tp;
    j["fp"] = fp;
    j["fn"] = fn;
    auto &pc = j["per_category"] = nlohmann::json::object();
    for (const auto &[c, s] : per_category)
        pc[std::string(detector::to_string(c))] = {{"ap", s.ap}, {"ar", s.ar}, {"gt", s.gt},
                                                   {"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}};
    return j;
}

std::string EvalReport::table() const
{
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "%-10s %7s %7s %6s %6s %6s %6s\n", "category", "AP", "AR", "gt", "tp", "fp", "fn");
    out << line;
    for (const auto &[c, s] : per_category) {
        std::snprintf(line, sizeof line, "%-10s %7.4f %7.4f %6zu %6zu %6zu %6zu\n",
                      std::string(detector::to_string(c)).c_str(), s.ap, s.ar, s.gt, s.tp, s.fp, s.fn);
        out << line;
    }
    std::snprintf(line, sizeof line, "%-10s %7.4f %7.4f %6s %6zu %6zu %6zu\n", "mean", map, mar, "", tp, fp, fn);
    out << line;
    return out.str();
}

} // namespace sketchwatch::datakit
