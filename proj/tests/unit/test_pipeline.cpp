// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "sketchwatch/common/error.hpp"
#include "sketchwatch/pipeline/pipeline.hpp"

#include <atomic>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

using namespace sketchwatch;
using namespace sketchwatch::pipeline;
using strokes::CanvasSnapshot;
using strokes::Stroke;
using strokes::StrokeKind;

namespace {

CanvasSnapshot snap(std::string sid, std::uint64_t seq, int strokes = 1)
{
    CanvasSnapshot s;
    s.session_id = std::move(sid);
    s.snapshot_seq = seq;
    for (int i = 0; i < strokes; ++i)
        s.strokes.push_back({i, StrokeKind::Draw, i * 10, {{10.0 + i * 20, 10}, {20.0 + i * 20, 40}}});
    return s;
}

std::uint64_t fnv(const std::vector<std::uint8_t> &px)
{
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : px)
        h = (h ^ v) * 1099511628211ull;
    return h;
}

// Returns one Text box when the canvas hashes to the trigger value.
class HashTrigger : public detector::Detector {
public:
    explicit HashTrigger(std::uint64_t trigger) : trigger_(trigger) {}
    std::vector<detector::DetectionBox> detect(const strokes::RenderedCanvas &c) const override
    {
        if (fnv(c.pixels) == trigger_)
            return {{50, 50, 40, 20, detector::Category::Text, 0.9}};
        return {};
    }

private:
    std::uint64_t trigger_;
};

// Throws for every seq divisible by `every`.
class Faulty : public detector::Detector {
public:
    explicit Faulty(std::uint64_t every) : every_(every) {}
    std::vector<detector::DetectionBox> detect(const strokes::RenderedCanvas &c) const override
    {
        if (c.snapshot_seq % every_ == 0)
            throw std::runtime_error("injected fault");
        return {};
    }

private:
    std::uint64_t every_;
};

PipelineConfig small_cfg(int render = 4, int detect = 2)
{
    PipelineConfig c;
    c.render_workers = render;
    c.detect_workers = detect;
    c.render.width = c.render.height = 128;
    return c;
}

} // namespace

TEST_CASE("queue: capacity bound, FIFO order and counters")
{
    WorkQueue<int> q(3);
    CHECK(q.try_push(1));
    CHECK(q.try_push(2));
    CHECK(q.try_push(3));
    CHECK_FALSE(q.try_push(4));
    CHECK(q.stats().depth == 3);
    CHECK(q.try_pop() == 1);
    CHECK(q.try_pop() == 2);
    auto s = q.stats();
    CHECK(s.enqueued == 3);
    CHECK(s.dequeued == 2);
    CHECK(s.high_water == 3);
    q.close();
    CHECK(q.pop() == 3); // drains after close
    CHECK_FALSE(q.pop());
    CHECK_FALSE(q.push(9));
}

TEST_CASE("queue: supersession drops the same session's oldest snapshot when full")
{
    WorkQueue<CanvasItem> q(2);
    auto same = [](std::string sid) { return [sid](const CanvasItem &i) { return i.snapshot.session_id == sid; }; };
    CHECK_FALSE(q.push_superseding(CanvasItem{snap("a", 5)}, same("a")));
    CHECK_FALSE(q.push_superseding(CanvasItem{snap("b", 1)}, same("b")));
    auto victim = q.push_superseding(CanvasItem{snap("a", 6)}, same("a"));
    REQUIRE(victim);
    CHECK(victim->snapshot.snapshot_seq == 5);
    CHECK(q.try_pop()->snapshot.session_id == "b");
    CHECK(q.try_pop()->snapshot.snapshot_seq == 6);
    CHECK(q.stats().dropped == 1);
}

TEST_CASE("queue: two sessions, one snapshot each are both retained; fallback drops oldest")
{
    WorkQueue<CanvasItem> q(2);
    auto same = [](std::string sid) { return [sid](const CanvasItem &i) { return i.snapshot.session_id == sid; }; };
    q.push_superseding(CanvasItem{snap("a", 1)}, same("a"));
    q.push_superseding(CanvasItem{snap("b", 1)}, same("b"));
    CHECK(q.stats().depth == 2);
    CHECK(q.stats().dropped == 0);
    auto victim = q.push_superseding(CanvasItem{snap("c", 1)}, same("c"));
    REQUIRE(victim);
    CHECK(victim->snapshot.session_id == "a");
}

TEST_CASE("queue: random operations match a reference model")
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t cap = 1 + rng() % 5;
        WorkQueue<std::pair<int, int>> q(cap); // (session, seq)
        std::deque<std::pair<int, int>> model;
        std::uint64_t drops = 0, pops = 0, pushes = 0;
        std::vector<int> seq(3, 0);
        for (int step = 0; step < 100; ++step) {
            if (rng() % 3) {
                const int s = static_cast<int>(rng() % 3);
                const std::pair<int, int> item{s, ++seq[s]};
                auto victim = q.push_superseding(item, [&](const auto &x) { return x.first == s; });
                if (model.size() >= cap) {
                    auto it = std::find_if(model.begin(), model.end(), [&](const auto &x) { return x.first == s; });
                    if (it == model.end())
                        it = model.begin();
                    REQUIRE(victim);
                    CHECK(*victim == *it);
                    model.erase(it);
                    ++drops;
                } else {
                    CHECK_FALSE(victim);
                }
                model.push_back(item);
                ++pushes;
            } else {
                auto got = q.try_pop();
                if (model.empty()) {
                    CHECK_FALSE(got);
                } else {
                    REQUIRE(got);
                    CHECK(*got == model.front());
                    model.pop_front();
                    ++pops;
                }
            }
            const auto st = q.stats();
            CHECK(st.depth <= cap);
            CHECK(st.depth == model.size());
            CHECK(st.enqueued == st.dequeued + st.dropped + st.depth);
        }
        CHECK(q.stats().enqueued == pushes);
        CHECK(q.stats().dropped == drops);
        CHECK(q.stats().dequeued == pops);
    }
}

TEST_CASE("queue: concurrent producers and consumers, exactly once")
{
    WorkQueue<int> q(8);
    const int producers = 4, per = 2000;
    std::vector<std::thread> threads;
    std::mutex seen_mutex;
    std::multiset<int> seen;
    for (int p = 0; p < producers; ++p)
        threads.emplace_back([&, p] {
            for (int i = 0; i < per; ++i)
                q.push(p * per + i);
        });
    std::vector<std::thread> consumers;
    for (int c = 0; c < 3; ++c)
        consumers.emplace_back([&] {
            while (auto v = q.pop()) {
                std::lock_guard lock(seen_mutex);
                seen.insert(*v);
            }
        });
    for (auto &t : threads)
        t.join();
    q.close();
    for (auto &t : consumers)
        t.join();
    CHECK(seen.size() == producers * per);
    CHECK(std::set<int>(seen.begin(), seen.end()).size() == producers * per);
    CHECK(q.stats().enqueued == q.stats().dequeued);
}

TEST_CASE("render worker output equals direct rasterization")
{
    strokes::RenderConfig cfg;
    auto s = snap("x", 3, 3);
    auto r = render_item(CanvasItem{s, Clock::now()}, cfg);
    CHECK(r.canvas == strokes::rasterize(s, cfg));
    CHECK(r.canvas.session_id == "x");
    CHECK(r.canvas.snapshot_seq == 3);
}

TEST_CASE("detect step: blank canvas, trigger pattern, and failure")
{
    strokes::RenderConfig cfg;
    cfg.width = cfg.height = 64;
    auto blank = render_item(CanvasItem{snap("s", 1, 0)}, cfg);
    detector::StubDetector stub({}, std::chrono::microseconds{0});
    auto r = detect_item(blank, stub, 0);
    CHECK(r.boxes.empty());
    CHECK_FALSE(r.error);

    auto inked = render_item(CanvasItem{snap("s", 2, 2)}, cfg);
    HashTrigger trig(fnv(inked.canvas.pixels));
    CHECK(detect_item(inked, trig, 1).boxes.size() == 1);
    CHECK(detect_item(blank, trig, 1).boxes.empty());

    Faulty bad(1);
    auto f = detect_item(inked, bad, 2);
    CHECK(f.error);
    CHECK(f.boxes.empty());
    CHECK(f.detector_id == 2);
}

TEST_CASE("pipeline: 16 render workers, 100 snapshots, 100 results, no duplicates")
{
    std::mutex m;
    std::multiset<std::pair<std::string, std::uint64_t>> got;
    auto cfg = small_cfg(16, 4);
    Pipeline p(cfg, std::make_shared<detector::StubDetector>(std::vector<detector::DetectionBox>{},
                                                             std::chrono::microseconds{0}),
               [&](const DetectionResult &r) {
                   std::lock_guard lock(m);
                   got.insert({r.session_id, r.snapshot_seq});
               });
    p.start();
    for (int i = 0; i < 100; ++i)
        p.submit(snap("s" + std::to_string(i), 1, 1 + i % 3)); // distinct sessions: nothing stale
    REQUIRE(p.wait_idle());
    p.stop();
    CHECK(got.size() == 100);
    CHECK(std::set(got.begin(), got.end()).size() == 100);
    auto m2 = p.metrics();
    CHECK(m2.completed == 100);
    CHECK(m2.canvas_queue.enqueued == m2.canvas_queue.dequeued + m2.canvas_queue.dropped);
    CHECK(m2.rendered_queue.enqueued == m2.rendered_queue.dequeued);
    CHECK(m2.n_sess == 100);
}

TEST_CASE("pipeline: results reach the sink in increasing seq per session")
{
    std::mutex m;
    std::map<std::string, std::vector<std::uint64_t>> order;
    auto cfg = small_cfg(8, 4);
    cfg.canvas_capacity = 8;
    Pipeline p(cfg, std::make_shared<detector::StubDetector>(std::vector<detector::DetectionBox>{},
                                                             std::chrono::microseconds{200}),
               [&](const DetectionResult &r) {
                   std::lock_guard lock(m);
                   order[r.session_id].push_back(r.snapshot_seq);
               });
    p.start();
    for (std::uint64_t seq = 1; seq <= 200; ++seq)
        for (const char *s : {"a", "b", "c"})
            p.submit(snap(s, seq, 1 + static_cast<int>(seq % 4)));
    REQUIRE(p.wait_idle());
    p.stop();
    for (auto &[sid, seqs] : order) {
        CHECK(std::is_sorted(seqs.begin(), seqs.end()));
        CHECK(std::adjacent_find(seqs.begin(), seqs.end()) == seqs.end());
        CHECK(seqs.back() == 200); // latest canvas is never lost
    }
    auto mm = p.metrics();
    CHECK(mm.submitted == 600);
    CHECK(mm.canvas_queue.enqueued == mm.canvas_queue.dequeued + mm.canvas_queue.dropped);
    CHECK(mm.completed + mm.stale_results + mm.superseded == 600);
    CHECK(mm.superseded == mm.canvas_queue.dropped);
}

TEST_CASE("pipeline: 1% injected detector faults, every item still completes")
{
    std::atomic<int> errors{0}, total{0};
    auto cfg = small_cfg(4, 4);
    cfg.canvas_capacity = 1024; // no supersession, so every fault is observed
    Pipeline p(cfg, std::make_shared<Faulty>(100), [&](const DetectionResult &r) {
        ++total;
        if (r.error)
            ++errors;
    });
    p.start();
    for (std::uint64_t i = 1; i <= 1000; ++i)
        p.submit(snap("s" + std::to_string(i % 10), i)); // seq divisible by 100 fails
    REQUIRE(p.wait_idle());
    p.stop();
    auto mm = p.metrics();
    CHECK(mm.completed + mm.stale_results + mm.superseded == 1000);
    CHECK(mm.superseded == 0);
    CHECK(mm.detector_errors == 10);
    CHECK(total + static_cast<int>(mm.stale_results) == 1000);
}

TEST_CASE("pipeline: p-time agrees with an externally logged oracle")
{
    std::mutex m;
    std::map<std::pair<std::string, std::uint64_t>, Clock::time_point> submitted, done;
    auto cfg = small_cfg(2, 1);
    Pipeline p(cfg, std::make_shared<detector::StubDetector>(std::vector<detector::DetectionBox>{},
                                                             std::chrono::microseconds{1000}),
               [&](const DetectionResult &r) {
                   std::lock_guard lock(m);
                   done[{r.session_id, r.snapshot_seq}] = Clock::now();
               });
    p.start();
    for (std::uint64_t i = 1; i <= 200; ++i) {
        const std::string sid = "s" + std::to_string(i % 4);
        {
            std::lock_guard lock(m);
            submitted[{sid, i}] = Clock::now();
        }
        p.submit(snap(sid, i));
        std::this_thread::sleep_for(std::chrono::microseconds(1500));
    }
    REQUIRE(p.wait_idle());
    p.stop();
    double sum = 0;
    for (auto &[k, t] : done)
        sum += std::chrono::duration<double, std::milli>(t - submitted.at(k)).count();
    const double oracle = sum / static_cast<double>(done.size());
    auto mm = p.metrics();
    CHECK(mm.completed == done.size());
    MESSAGE("p_time " << mm.p_time_ms << " ms, oracle " << oracle << " ms");
    CHECK(std::abs(mm.p_time_ms - oracle) <= 0.05 * oracle);
    double worst_stage = 0;
    for (auto &[name, h] : mm.stages)
        worst_stage = std::max(worst_stage, h.mean());
    CHECK(mm.p_time_ms >= worst_stage);
}

TEST_CASE("pipeline: event log, metrics text, lifecycle errors")
{
    std::ostringstream log;
    auto cfg = small_cfg(1, 1);
    Pipeline p(cfg, std::make_shared<detector::StubDetector>(), {}, &log);
    CHECK_THROWS_AS(p.submit(snap("", 1)), Error);
    p.start();
    p.session_opened("a");
    p.submit(snap("a", 1));
    REQUIRE(p.wait_idle());
    p.session_closed("a");
    auto text = p.metrics().to_text();
    for (const char *key : {"p_time_ms ", "n_sess 1", "tpr_s ", "canvas_queue_dropped 0", "stage_detect_mean_ms"})
        CHECK(text.find(key) != std::string::npos);
    p.stop();
    CHECK_THROWS_AS(p.submit(snap("a", 2)), Error);
    std::istringstream lines(log.str());
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j.contains("event"));
        CHECK(j.contains("t_us"));
        ++n;
    }
    CHECK(n >= 2);
    CHECK(p.metrics().to_json()["completed"] == 1);
}

TEST_CASE("compute_tpr arithmetic")
{
    auto t = compute_tpr(400.0, 4);
    CHECK(t.tpr_s == doctest::Approx(0.1));
    CHECK(t.rate_per_s == doctest::Approx(10.0));
    CHECK(compute_tpr(400.0, 1).rate_per_s == doctest::Approx(2.5));
    MetricsSnapshot empty;
    CHECK_THROWS_AS(compute_tpr(empty), Error);
    CHECK_THROWS_AS(compute_tpr(0.0, 3), Error);
    CHECK_THROWS_AS(compute_tpr(10.0, 0), Error);
}

TEST_CASE("latency histogram buckets")
{
    LatencyHistogram h;
    h.add(0.2);
    h.add(3);
    h.add(10);
    h.add(99999);
    auto c = h.cumulative();
    CHECK(c[0] == 1);  // <= 0.5
    CHECK(c[3] == 2);  // <= 5
    CHECK(c[4] == 3);  // <= 10
    CHECK(c.back() == 4);
    CHECK(h.max() == 99999);
    CHECK(h.mean() == doctest::Approx((0.2 + 3 + 10 + 99999) / 4));
}
