// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/datakit/synth.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sketchwatch::datakit {

namespace {

using strokes::Point;
using strokes::Rect;
using strokes::Stroke;
using UV = std::vector<std::pair<double, double>>;
constexpr double kPi = std::numbers::pi;

UV arc(double cu, double cv, double ru, double rv, double a0, double a1, int n)
{
    UV out;
    for (int i = 0; i <= n; ++i) {
        const double a = a0 + (a1 - a0) * i / n;
        out.emplace_back(cu + ru * std::cos(a), cv + rv * std::sin(a));
    }
    return out;
}

// Dense polyline through the given corners so jitter looks like a wobbly hand.
UV densify(const UV &pts, int per_segment = 6)
{
    if (pts.size() < 2)
        return pts;
    UV out;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        for (int k = 0; k < per_segment; ++k) {
            const double t = static_cast<double>(k) / per_segment;
            out.emplace_back(pts[i].first + t * (pts[i + 1].first - pts[i].first),
                             pts[i].second + t * (pts[i + 1].second - pts[i].second));
        }
    out.push_back(pts.back());
    return out;
}

struct Builder {
    Rect region;
    double noise;
    std::mt19937_64 &rng;
    std::vector<Stroke> out;

    void add(const UV &uv)
    {
        std::normal_distribution<double> n(0.0, noise);
        Stroke s;
        s.id = static_cast<std::int64_t>(out.size());
        s.timestamp_ms = static_cast<std::int64_t>(out.size()) * 300;
        for (const auto &[u, v] : uv)
            s.points.push_back({region.x0 + u * region.width() + n(rng), region.y0 + v * region.height() + n(rng)});
        out.push_back(std::move(s));
    }
    // Sub-box of the region in unit coordinates.
    void add_in(const UV &uv, double u0, double u1)
    {
        UV m;
        for (const auto &[u, v] : uv)
            m.emplace_back(u0 + u * (u1 - u0), v);
        add(m);
    }
};

void letter(Builder &b, int which, double u0, double u1)
{
    switch (which % 6) {
    case 0: // A
        b.add_in(densify({{0, 1}, {0.5, 0}, {1, 1}}), u0, u1);
        b.add_in(densify({{0.25, 0.6}, {0.75, 0.6}}), u0, u1);
        break;
    case 1: // T
        b.add_in(densify({{0, 0}, {1, 0}}), u0, u1);
        b.add_in(densify({{0.5, 0}, {0.5, 1}}), u0, u1);
        break;
    case 2: // L
        b.add_in(densify({{0, 0}, {0, 1}, {1, 1}}), u0, u1);
        break;
    case 3: // X
        b.add_in(densify({{0, 0}, {1, 1}}), u0, u1);
        b.add_in(densify({{1, 0}, {0, 1}}), u0, u1);
        break;
    case 4: // E
        b.add_in(densify({{1, 0}, {0, 0}, {0, 1}, {1, 1}}), u0, u1);
        b.add_in(densify({{0, 0.5}, {0.7, 0.5}}), u0, u1);
        break;
    default: { // S
        UV s = arc(0.5, 0.25, 0.5, 0.25, -0.1 * kPi, -1.5 * kPi, 12);
        UV lower = arc(0.5, 0.75, 0.5, 0.25, -0.5 * kPi, 0.9 * kPi, 12);
        s.insert(s.end(), lower.begin(), lower.end());
        b.add_in(s, u0, u1);
    }
    }
}

void digit(Builder &b, int which, double u0, double u1)
{
    switch (which % 5) {
    case 0: b.add_in(densify({{0.2, 0.25}, {0.55, 0}, {0.55, 1}}), u0, u1); break;
    case 1: b.add_in(densify({{0, 0}, {1, 0}, {0.35, 1}}), u0, u1); break;
    case 2: b.add_in(arc(0.5, 0.5, 0.5, 0.5, -0.5 * kPi, 1.6 * kPi, 24), u0, u1); break;
    case 3: b.add_in(densify({{0.75, 1}, {0.75, 0}, {0, 0.65}, {1, 0.65}}), u0, u1); break;
    default: {
        UV s = arc(0.5, 0.3, 0.45, 0.3, -kPi, 0.2 * kPi, 12);
        UV tail = densify({{0.85, 0.45}, {0, 1}, {1, 1}});
        s.insert(s.end(), tail.begin(), tail.end());
        b.add_in(s, u0, u1);
    }
    }
}

} // namespace

Rect synth_glyph_region(FineLabel label, std::mt19937_64 &rng, const SynthConfig &cfg)
{
    const double side = std::min(cfg.render.width, cfg.render.height);
    const double h = std::uniform_real_distribution<double>(cfg.glyph_min, cfg.glyph_max)(rng) * side;
    double aspect = 1.0;
    switch (label) {
    case FineLabel::RunningHand: aspect = std::uniform_real_distribution<double>(2.0, 3.5)(rng); break;
    case FineLabel::Number: aspect = 0.6 * std::uniform_int_distribution<int>(1, 3)(rng); break;
    case FineLabel::Arrow: aspect = std::uniform_real_distribution<double>(1.5, 2.2)(rng); break;
    case FineLabel::IndividualLetter:
    case FineLabel::QuestionMark: aspect = 0.7; break;
    default: aspect = std::uniform_real_distribution<double>(0.8, 1.25)(rng);
    }
    const double w = std::min(h * aspect, 0.6 * cfg.render.width);
    return {0.0, 0.0, w, h};
}

std::vector<Stroke> synth_glyph(FineLabel label, const Rect &region, std::mt19937_64 &rng, const SynthConfig &cfg)
{
    if (!(region.width() > 0 && region.height() > 0))
        throw Error(Errc::invalid_argument, "glyph region must have positive size");
    const double scale = std::min(cfg.render.width, cfg.render.height) / 512.0;
    Builder b{region, cfg.jitter * scale, rng, {}};
    std::uniform_int_distribution<int> pick(0, 1 << 20);
    switch (label) {
    case FineLabel::RunningHand: {
        const int letters = std::max(2, static_cast<int>(std::lround(region.width() / region.height() * 1.6)));
        UV uv;
        std::uniform_real_distribution<double> amp(0.55, 1.0);
        for (int k = 0; k < letters; ++k) {
            const double a = amp(rng);
            for (int i = 0; i < 16; ++i) {
                const double t = k + i / 16.0;
                const double u = (t - 0.3 * std::sin(2 * kPi * t)) / letters;
                const double v = 0.5 + 0.5 * a * std::cos(2 * kPi * t + kPi);
                uv.emplace_back(std::clamp(u, 0.0, 1.0), v);
            }
        }
        uv.emplace_back(1.0, 0.5);
        b.add(uv);
        break;
    }
    case FineLabel::IndividualLetter: letter(b, pick(rng), 0.0, 1.0); break;
    case FineLabel::Number: {
        const int digits = std::clamp(static_cast<int>(std::lround(region.width() / region.height() / 0.6)), 1, 3);
        for (int d = 0; d < digits; ++d)
            digit(b, pick(rng), (d + 0.1) / digits, (d + 0.9) / digits);
        break;
    }
    case FineLabel::Circle: {
        const double a0 = std::uniform_real_distribution<double>(0, 2 * kPi)(rng);
        b.add(arc(0.5, 0.5, 0.5, 0.5, a0, a0 + 2.1 * kPi, 40));
        break;
    }
    case FineLabel::Arrow:
        b.add(densify({{0, 0.5}, {1, 0.5}}, 12));
        b.add(densify({{0.72, 0.1}, {1, 0.5}, {0.72, 0.9}}));
        break;
    case FineLabel::QuestionMark: {
        UV s = arc(0.5, 0.28, 0.45, 0.28, -kPi, 0.5 * kPi, 16);
        s.emplace_back(0.5, 0.75);
        b.add(s);
        b.add({{0.5, 0.95}, {0.5, 1.0}});
        break;
    }
    case FineLabel::Misc: {
        UV star;
        for (int i = 0; i <= 5; ++i) {
            const double a = -0.5 * kPi + i * 4.0 * kPi / 5.0;
            star.emplace_back(0.5 + 0.5 * std::cos(a), 0.5 + 0.5 * std::sin(a));
        }
        b.add(densify(star));
        break;
    }
    }
    return b.out;
}

AnnotatedSession synth_clean(const std::string &phrase, std::uint64_t seed, const SynthConfig &cfg)
{
    cfg.render.validate();
    std::mt19937_64 rng(seed);
    const double W = cfg.render.width, H = cfg.render.height;
    const double side = cfg.doodle_size * std::min(W, H);
    const double margin = cfg.render.draw_thickness;
    std::uniform_real_distribution<double> ox(margin, std::max(margin, W - side - margin)),
        oy(margin, std::max(margin, H - side - margin));
    const Rect region{ox(rng), oy(rng), 0, 0};
    const double scale = std::min(W, H) / 512.0;
    std::normal_distribution<double> noise(0.0, cfg.jitter * scale);

    AnnotatedSession s;
    s.session_id = "clean-" + phrase + "-" + std::to_string(seed);
    s.phrase = phrase;
    const int n = std::uniform_int_distribution<int>(cfg.doodle_strokes_min, cfg.doodle_strokes_max)(rng);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int k = 0; k < n; ++k) {
        Stroke st;
        st.id = k;
        st.timestamp_ms = 400 * k;
        const double cu = 0.3 + 0.4 * u01(rng), cv = 0.3 + 0.4 * u01(rng);
        const double r = 0.15 + 0.15 * u01(rng);
        if (k == 0 || u01(rng) < 0.5) {
            // Closed blob with a couple of low-frequency bumps.
            const double a2 = 0.25 * u01(rng), a3 = 0.15 * u01(rng), ph = 2 * kPi * u01(rng);
            for (int i = 0; i <= 36; ++i) {
                const double t = 2 * kPi * i / 36;
                const double rr = r * (1 + a2 * std::sin(2 * t + ph) + a3 * std::sin(3 * t));
                st.points.push_back({region.x0 + side * (cu + rr * std::cos(t)) + noise(rng),
                                     region.y0 + side * (cv + rr * std::sin(t)) + noise(rng)});
            }
        } else {
            const double a = 2 * kPi * u01(rng), f = 1 + 2 * u01(rng);
            for (int i = 0; i <= 20; ++i) {
                const double t = -1 + 2.0 * i / 20;
                const double u = cu + 0.35 * t * std::cos(a) - 0.08 * std::sin(f * kPi * t) * std::sin(a);
                const double v = cv + 0.35 * t * std::sin(a) + 0.08 * std::sin(f * kPi * t) * std::cos(a);
                st.points.push_back({region.x0 + side * std::clamp(u, 0.0, 1.0) + noise(rng),
                                     region.y0 + side * std::clamp(v, 0.0, 1.0) + noise(rng)});
            }
        }
        s.strokes.push_back(std::move(st));
    }
    return s;
}

AnnotatedSession synth_donor(const std::string &phrase, std::span<const FineLabel> labels, std::uint64_t seed,
                             const SynthConfig &cfg)
{
    if (labels.empty())
        throw Error(Errc::invalid_argument, "a donor needs at least one label");
    AnnotatedSession s = synth_clean(phrase, seed, cfg);
    std::mt19937_64 rng(seed ^ 0x5bd1e995u);
    AugmentConfig ac;
    ac.render = cfg.render;
    for (FineLabel l : labels) {
        const Rect region = synth_glyph_region(l, rng, cfg);
        const auto glyph = synth_glyph(l, region, rng, cfg);
        s = insert_glyph(s, glyph, l, 0.0, rng, ac);
    }
    s.session_id = "donor-" + phrase + "-" + std::to_string(seed);
    return s;
}

std::vector<AnnotatedSession> synth_dataset(const SynthDatasetSpec &spec)
{
    if (spec.labels.empty())
        throw Error(Errc::invalid_argument, "synth dataset needs labels");
    std::mt19937_64 master(spec.seed);
    std::vector<AnnotatedSession> clean, donors, augmented;
    AugmentConfig ac;
    ac.render = spec.synth.render;
    std::size_t label_cursor = 0;
    for (const auto &phrase : spec.phrases) {
        const std::size_t c0 = clean.size(), d0 = donors.size();
        for (int i = 0; i < spec.clean_per_phrase; ++i)
            clean.push_back(synth_clean(phrase, master(), spec.synth));
        for (int i = 0; i < spec.donors_per_phrase; ++i) {
            const FineLabel l = spec.labels[label_cursor++ % spec.labels.size()];
            donors.push_back(synth_donor(phrase, std::span(&l, 1), master(), spec.synth));
        }
        if (spec.clean_per_phrase == 0 || spec.donors_per_phrase == 0)
            continue;
        const std::span<const AnnotatedSession> cp(clean.data() + c0, clean.size() - c0);
        const std::span<const AnnotatedSession> dp(donors.data() + d0, donors.size() - d0);
        for (int i = 0; i < spec.augmented_per_phrase; ++i)
            augmented.push_back(augment(cp, dp, master(), ac));
    }
    std::vector<AnnotatedSession> out;
    out.reserve(clean.size() + donors.size() + augmented.size());
    for (auto *v : {&clean, &donors, &augmented})
        std::move(v->begin(), v->end(), std::back_inserter(out));
    return out;
}

} // namespace sketchwatch::datakit
