// SPDX-License-Identifier: Apache-2.0
// Reference scorer: brute-force matching and a PR curve integrated point by point.
#pragma once

#include "oracles/detector_oracle.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <vector>

namespace oracle {

using sketchwatch::detector::Category;

struct CatScore {
    double ap = 0, ar = 0;
    std::size_t tp = 0, fp = 0, gt = 0;
};

struct Report {
    std::map<Category, CatScore> cats;
    double map = 0, mar = 0;
};

inline Report evaluate(const std::vector<std::vector<DetectionBox>> &pred,
                       const std::vector<std::vector<DetectionBox>> &gt, double thr = 0.5, std::size_t max_dets = 100)
{
    std::set<Category> gcats, all;
    for (auto &img : gt)
        for (auto &b : img)
            gcats.insert(b.category), all.insert(b.category);
    for (auto &img : pred)
        for (auto &b : img)
            all.insert(b.category);
    Report r;
    for (Category c : all) {
        // (conf, image, index), keeping the top max_dets per image
        std::vector<std::tuple<double, std::size_t, std::size_t>> ranked;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            std::vector<std::tuple<double, std::size_t, std::size_t>> mine;
            for (std::size_t k = 0; k < pred[i].size(); ++k)
                if (pred[i][k].category == c)
                    mine.emplace_back(-pred[i][k].confidence, i, k);
            std::sort(mine.begin(), mine.end());
            if (mine.size() > max_dets)
                mine.resize(max_dets);
            ranked.insert(ranked.end(), mine.begin(), mine.end());
        }
        std::sort(ranked.begin(), ranked.end());
        CatScore s;
        for (auto &img : gt)
            for (auto &b : img)
                s.gt += b.category == c;
        std::set<std::pair<std::size_t, std::size_t>> taken;
        std::vector<std::pair<double, double>> pr; // (recall, precision) after each detection
        for (auto &[negconf, i, k] : ranked) {
            double best = -1;
            std::size_t arg = 0;
            bool any = false;
            for (std::size_t g = 0; g < gt[i].size(); ++g) {
                if (gt[i][g].category != c || taken.count({i, g}))
                    continue;
                const double v = oracle::iou(pred[i][k].geometry(), gt[i][g].geometry());
                if (!any || v > best)
                    best = v, arg = g, any = true;
            }
            if (any && best >= thr) {
                taken.insert({i, arg});
                ++s.tp;
            } else {
                ++s.fp;
            }
            pr.emplace_back(s.gt ? double(s.tp) / s.gt : 0.0, double(s.tp) / (s.tp + s.fp));
        }
        // AP = sum over distinct recall steps of (step width) x (max precision at recall >= this level)
        double prev = 0;
        for (std::size_t j = 0; j < pr.size(); ++j) {
            const double rj = pr[j].first;
            if (rj <= prev)
                continue;
            double pmax = 0;
            for (auto &[rr, pp] : pr)
                if (rr >= rj)
                    pmax = std::max(pmax, pp);
            s.ap += (rj - prev) * pmax;
            prev = rj;
        }
        s.ar = s.gt ? double(s.tp) / s.gt : 0.0;
        r.cats[c] = s;
    }
    for (Category c : gcats) {
        r.map += r.cats[c].ap / gcats.size();
        r.mar += r.cats[c].ar / gcats.size();
    }
    return r;
}

// Area of the rectangle intersection, or 0.
inline double overlap_area(double ax0, double ay0, double ax1, double ay1, double bx0, double by0, double bx1,
                           double by1)
{
    const double w = std::min(ax1, bx1) - std::max(ax0, bx0);
    const double h = std::min(ay1, by1) - std::max(ay0, by0);
    return (w > 0 && h > 0) ? w * h : 0.0;
}

} // namespace oracle
