// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "oracles/geometry_oracle.hpp"
#include "sketchwatch/common/error.hpp"
#include "sketchwatch/strokes/stroke.hpp"

#include <random>
#include <sstream>

using namespace sketchwatch;
using namespace sketchwatch::strokes;

namespace {

Stroke make(std::vector<Point> pts, StrokeKind kind = StrokeKind::Draw, std::int64_t t = 0, std::int64_t id = 0)
{
    Stroke s;
    s.id = id;
    s.kind = kind;
    s.timestamp_ms = t;
    s.points = std::move(pts);
    return s;
}

} // namespace

TEST_CASE("simplify drops points within epsilon")
{
    auto out = simplify(make({{0, 0}, {1, 0.1}, {2, 0}}), {2.0});
    CHECK(out.points == std::vector<Point>{{0, 0}, {2, 0}});
}

TEST_CASE("simplify keeps a single point")
{
    auto out = simplify(make({{0, 0}}), {2.0});
    CHECK(out.points == std::vector<Point>{{0, 0}});
}

TEST_CASE("simplify keeps an apex farther than epsilon")
{
    std::vector<Point> pts{{0, 0}, {5, 5}, {10, 0}};
    CHECK(oracle::rdp(pts, 2.0) == pts);
    CHECK(simplify(make(pts), {2.0}).points == pts);
}

TEST_CASE("simplify preserves kind, id and timestamp")
{
    auto in = make({{0, 0}, {1, 0}, {2, 0}}, StrokeKind::Erase, 77, 9);
    auto out = simplify(in);
    CHECK(out.kind == StrokeKind::Erase);
    CHECK(out.timestamp_ms == 77);
    CHECK(out.id == 9);
}

TEST_CASE("simplify matches the recursive oracle and its invariants on random strokes")
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> eps_dist(0.0, 6.0);
    for (int trial = 0; trial < 500; ++trial) {
        // Random walk so strokes look like pen traces.
        Stroke s;
        Point p{256, 256};
        std::normal_distribution<double> step(0.0, 3.0);
        const int n = 2 + static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) {
            p.x += step(rng);
            p.y += step(rng);
            s.points.push_back(p);
        }
        const double eps = eps_dist(rng);
        const auto out = simplify(s, {eps});
        REQUIRE(out.points == oracle::rdp(s.points, eps));
        REQUIRE(out.points.front() == s.points.front());
        REQUIRE(out.points.back() == s.points.back());

        // Every dropped point is within eps of the segment replacing it.
        std::size_t k = 0;
        for (std::size_t i = 0; i < s.points.size(); ++i) {
            if (k + 1 < out.points.size() && s.points[i] == out.points[k + 1]) {
                ++k;
                continue;
            }
            if (s.points[i] == out.points[k])
                continue;
            REQUIRE(k + 1 < out.points.size());
            CHECK(oracle::seg_dist(s.points[i], out.points[k], out.points[k + 1]) <= eps + 1e-12);
        }

        // Idempotence and monotonicity in epsilon.
        CHECK(simplify(out, {eps}).points == out.points);
        const double eps2 = eps + eps_dist(rng);
        CHECK(simplify(s, {eps2}).points.size() <= out.points.size());
    }
}

TEST_CASE("rasterize an empty snapshot is blank")
{
    CanvasSnapshot snap;
    auto img = rasterize(snap);
    CHECK(img.width == 512);
    CHECK(img.height == 512);
    CHECK(img.pixels.size() == 512u * 512u);
    CHECK(img.ink_count() == 0);
}

TEST_CASE("rasterize a horizontal segment matches the per-pixel distance oracle")
{
    CanvasSnapshot snap;
    snap.strokes.push_back(make({{10, 10}, {100, 10}}));
    auto img = rasterize(snap);
    auto expected = oracle::raster(snap.strokes, 512, 512, 4.0, 16.0);
    CHECK(img.pixels == expected);
    // Interior columns: rows whose centers are within 2 px vertically.
    for (int y = 0; y < 20; ++y)
        CHECK(img.at(50, y) == ((y >= 8 && y <= 11) ? 1 : 0));
}

TEST_CASE("erase covering a draw stroke clears it")
{
    CanvasSnapshot snap;
    snap.strokes.push_back(make({{10, 10}, {100, 40}, {200, 20}}, StrokeKind::Draw, 0));
    snap.strokes.push_back(make({{10, 10}, {100, 40}, {200, 20}}, StrokeKind::Erase, 5));
    CHECK(rasterize(snap).ink_count() == 0);
}

TEST_CASE("rasterize respects timestamp order, not list order")
{
    auto draw = make({{50, 50}, {80, 50}}, StrokeKind::Draw, 10);
    auto erase = make({{50, 50}, {80, 50}}, StrokeKind::Erase, 20);
    CanvasSnapshot a;
    a.strokes = {erase, draw};
    CanvasSnapshot b;
    draw.timestamp_ms = 30;
    b.strokes = {erase, draw};
    CHECK(rasterize(a).ink_count() == 0);
    CHECK(rasterize(b).ink_count() > 0);
}

TEST_CASE("rasterize agrees with the oracle on random snapshots and is deterministic")
{
    std::mt19937_64 rng(7);
    RenderConfig cfg{96, 80, 4.0, 10.0};
    for (int trial = 0; trial < 25; ++trial) {
        CanvasSnapshot snap;
        const int n = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            auto kind = (rng() % 4 == 0) ? StrokeKind::Erase : StrokeKind::Draw;
            snap.strokes.push_back(oracle::random_stroke(rng, i, static_cast<std::int64_t>(rng() % 5), 5, -10, 110, kind));
        }
        auto img = rasterize(snap, cfg);
        REQUIRE(img.pixels == oracle::raster(snap.strokes, cfg.width, cfg.height, cfg.draw_thickness, cfg.erase_thickness));
        CHECK(rasterize(snap, cfg) == img);
    }
}

TEST_CASE("stroke_bbox examples")
{
    std::vector<Stroke> dot{make({{50, 50}})};
    CHECK(stroke_bbox(dot, 4.0) == Rect{48, 48, 52, 52});

    std::vector<Stroke> two{make({{0, 0}, {10, 20}})};
    CHECK(stroke_bbox(two, 4.0) == Rect{0, 0, 12, 22});

    std::vector<Stroke> erase_only{make({{5, 5}}, StrokeKind::Erase)};
    CHECK_THROWS_AS(stroke_bbox(erase_only, 4.0), Error);
}

TEST_CASE("stroke_bbox contains every rasterized ink pixel")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<Stroke> strokes;
        const int n = 1 + static_cast<int>(rng() % 4);
        for (int i = 0; i < n; ++i)
            strokes.push_back(oracle::random_stroke(rng, i, i, 6, -5, 133));
        CanvasSnapshot snap;
        snap.strokes = strokes;
        RenderConfig cfg{128, 128, 4.0, 16.0};
        auto img = rasterize(snap, cfg);
        auto box = stroke_bbox(strokes, cfg.draw_thickness, cfg.width, cfg.height);
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x)
                if (img.at(x, y))
                    REQUIRE(box.contains({x + 0.5, y + 0.5}));
    }
}

TEST_CASE("group_by_erase splits on erase strokes")
{
    auto d1 = make({{1, 1}}, StrokeKind::Draw, 0, 1);
    auto d2 = make({{2, 2}}, StrokeKind::Draw, 1, 2);
    auto e = make({{3, 3}}, StrokeKind::Erase, 2, 3);
    auto d3 = make({{4, 4}}, StrokeKind::Draw, 3, 4);

    std::vector<Stroke> in{d1, d2, e, d3};
    auto groups = group_by_erase(in);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0] == std::vector<Stroke>{d1, d2});
    CHECK(groups[1] == std::vector<Stroke>{d3});

    std::vector<Stroke> single{d1};
    CHECK(group_by_erase(single).size() == 1);

    std::vector<Stroke> erases{e, e};
    CHECK(group_by_erase(erases).empty());
}

TEST_CASE("stroke json rounds to two decimals and rejects malformed input")
{
    auto s = make({{1.234567, 2.0}, {3.005, 4.999}}, StrokeKind::Erase, 12, 3);
    auto j = to_json(s);
    CHECK(j["kind"] == "erase");
    CHECK(j["t_ms"] == 12);
    CHECK(j["pts"][0][0].get<double>() == doctest::Approx(1.23));
    auto back = stroke_from_json(j);
    CHECK(back.id == 3);
    CHECK(back.points.size() == 2);
    CHECK(back.points[1].y == doctest::Approx(5.0));

    CHECK_THROWS_AS(stroke_from_json(nlohmann::json::parse(R"({"id":1,"kind":"draw","t_ms":0,"pts":[]})")), Error);
    CHECK_THROWS_AS(stroke_from_json(nlohmann::json::parse(R"({"id":1,"kind":"ink","t_ms":0,"pts":[[1,2]]})")), Error);
    CHECK_THROWS_AS(stroke_from_json(nlohmann::json::parse(R"({"id":"x","kind":"draw","t_ms":0,"pts":[[1,2]]})")), Error);
    CHECK_THROWS_AS(stroke_from_json(nlohmann::json::parse(R"([1,2])")), Error);
}

TEST_CASE("pgm export writes 0/255 bytes")
{
    CanvasSnapshot snap;
    snap.strokes.push_back(make({{2, 2}}));
    auto img = rasterize(snap, {8, 8, 4.0, 16.0});
    std::ostringstream os;
    write_pgm(os, img);
    auto data = os.str();
    CHECK(data.rfind("P5\n8 8\n255\n", 0) == 0);
    CHECK(data.size() == std::string("P5\n8 8\n255\n").size() + 64);
    CHECK(static_cast<unsigned char>(data[std::string("P5\n8 8\n255\n").size() + 2 * 8 + 2]) == 255);
}
