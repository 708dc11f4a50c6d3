// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/pipeline/pipeline.hpp"

#include "sketchwatch/common/error.hpp"

#include <ostream>

namespace sketchwatch::pipeline {

namespace {

double ms_between(Clock::time_point a, Clock::time_point b)
{
    return std::chrono::duration<double, std::milli>(b - a).count();
}

std::int64_t us_now()
{
    return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now().time_since_epoch()).count();
}

} // namespace

void PipelineConfig::validate() const
{
    if (canvas_capacity == 0 || rendered_capacity == 0)
        throw Error(Errc::invalid_argument, "queue capacities must be positive");
    if (render_workers < 1 || detect_workers < 1)
        throw Error(Errc::invalid_argument, "worker counts must be positive");
    render.validate();
}

nlohmann::json PipelineConfig::to_json() const
{
    return {{"canvas_capacity", canvas_capacity},
            {"rendered_capacity", rendered_capacity},
            {"render_workers", render_workers},
            {"detect_workers", detect_workers},
            {"render",
             {{"width", render.width},
              {"height", render.height},
              {"draw_thickness", render.draw_thickness},
              {"erase_thickness", render.erase_thickness}}}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json &j)
{
    PipelineConfig c;
    try {
        c.canvas_capacity = j.value("canvas_capacity", c.canvas_capacity);
        c.rendered_capacity = j.value("rendered_capacity", c.rendered_capacity);
        c.render_workers = j.value("render_workers", c.render_workers);
        c.detect_workers = j.value("detect_workers", c.detect_workers);
        if (j.contains("render")) {
            const auto &r = j.at("render");
            c.render.width = r.value("width", c.render.width);
            c.render.height = r.value("height", c.render.height);
            c.render.draw_thickness = r.value("draw_thickness", c.render.draw_thickness);
            c.render.erase_thickness = r.value("erase_thickness", c.render.erase_thickness);
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("bad pipeline config: ") + e.what());
    }
    c.validate();
    return c;
}

RenderedItem render_item(const CanvasItem &item, const strokes::RenderConfig &cfg)
{
    RenderedItem out;
    out.submitted_at = item.submitted_at;
    out.canvas = strokes::rasterize(item.snapshot, cfg);
    return out;
}

DetectionResult detect_item(const RenderedItem &item, const detector::Detector &det, int detector_id)
{
    DetectionResult r;
    r.session_id = item.canvas.session_id;
    r.snapshot_seq = item.canvas.snapshot_seq;
    r.detector_id = detector_id;
    r.submitted_at = item.submitted_at;
    const auto t0 = Clock::now();
    try {
        r.boxes = det.detect(item.canvas);
    } catch (const std::exception &e) {
        r.boxes.clear();
        r.error = e.what();
    } catch (...) {
        r.boxes.clear();
        r.error = "unknown detector failure";
    }
    r.detect_ms = ms_between(t0, Clock::now());
    return r;
}

Pipeline::Pipeline(PipelineConfig cfg, std::shared_ptr<const detector::Detector> det, ResultSink sink,
                   std::ostream *event_log)
    : cfg_(std::move(cfg)), det_(std::move(det)), sink_(std::move(sink)), log_(event_log),
      canvas_q_(cfg_.canvas_capacity), rendered_q_(cfg_.rendered_capacity)
{
    cfg_.validate();
    if (!det_)
        throw Error(Errc::invalid_argument, "pipeline needs a detector");
    for (const char *s : {"canvas_wait", "render", "rendered_wait", "detect", "forward"})
        stages_[s];
}

Pipeline::~Pipeline() { stop(); }

void Pipeline::start()
{
    if (started_.exchange(true))
        return;
    for (int i = 0; i < cfg_.render_workers; ++i)
        render_threads_.emplace_back([this] { render_loop(); });
    for (int i = 0; i < cfg_.detect_workers; ++i)
        detect_threads_.emplace_back([this, i] { detect_loop(i); });
}

void Pipeline::stop()
{
    if (stopped_.exchange(true))
        return;
    canvas_q_.close();
    for (auto &t : render_threads_)
        t.join();
    rendered_q_.close();
    for (auto &t : detect_threads_)
        t.join();
    render_threads_.clear();
    detect_threads_.clear();
    // Never started: whatever is queued will not be processed.
    std::uint64_t leftover = 0;
    while (canvas_q_.try_pop())
        ++leftover;
    while (rendered_q_.try_pop())
        ++leftover;
    if (leftover)
        settle(leftover);
}

void Pipeline::submit(strokes::CanvasSnapshot snapshot)
{
    if (snapshot.session_id.empty())
        throw Error(Errc::invalid_argument, "snapshot has no session id");
    if (stopped_)
        throw Error(Errc::invalid_state, "pipeline is stopped");
    const std::string sid = snapshot.session_id;
    const std::uint64_t seq = snapshot.snapshot_seq;
    {
        std::lock_guard lock(metrics_mutex_);
        ++submitted_;
        if (active_.insert(sid).second)
            n_sess_ = std::max(n_sess_, active_.size());
    }
    auto victim = canvas_q_.push_superseding(CanvasItem{std::move(snapshot), Clock::now()},
                                             [&](const CanvasItem &q) { return q.snapshot.session_id == sid; });
    if (victim) {
        {
            std::lock_guard lock(metrics_mutex_);
            ++superseded_;
        }
        log_event({{"event", "superseded"},
                   {"session", victim->snapshot.session_id},
                   {"seq", victim->snapshot.snapshot_seq},
                   {"by_seq", seq}});
        settle(1);
    } else if (canvas_q_.closed()) {
        settle(1);
        throw Error(Errc::invalid_state, "pipeline is stopped");
    }
    log_event({{"event", "submit"}, {"session", sid}, {"seq", seq}});
}

void Pipeline::session_opened(const std::string &session_id)
{
    std::lock_guard lock(metrics_mutex_);
    if (active_.insert(session_id).second)
        n_sess_ = std::max(n_sess_, active_.size());
}

void Pipeline::session_closed(const std::string &session_id)
{
    // The forwarder purges its ordering state; taking forward_mutex_ here could
    // deadlock with a sink that calls back into whoever is closing the session.
    std::lock_guard lock(metrics_mutex_);
    active_.erase(session_id);
    closed_.push_back(session_id);
}

void Pipeline::render_loop()
{
    while (auto item = canvas_q_.pop()) {
        const auto dequeued = Clock::now();
        RenderedItem out = render_item(*item, cfg_.render);
        out.dequeued_at = dequeued;
        out.rendered_at = Clock::now();
        {
            std::lock_guard lock(metrics_mutex_);
            stages_["canvas_wait"].add(ms_between(item->submitted_at, dequeued));
            stages_["render"].add(ms_between(dequeued, out.rendered_at));
        }
        if (!rendered_q_.push(std::move(out)))
            settle(1);
    }
}

void Pipeline::detect_loop(int id)
{
    while (auto item = rendered_q_.pop()) {
        const auto dequeued = Clock::now();
        DetectionResult r = detect_item(*item, *det_, id);
        const auto detected = Clock::now();
        {
            std::lock_guard lock(metrics_mutex_);
            stages_["rendered_wait"].add(ms_between(item->rendered_at, dequeued));
            stages_["detect"].add(r.detect_ms);
            if (r.error)
                ++errors_;
        }
        if (r.error)
            log_event({{"event", "detector_error"}, {"session", r.session_id}, {"seq", r.snapshot_seq},
                       {"detector", id}, {"error", *r.error}});
        forward(r, *item, detected);
    }
}

void Pipeline::forward(const DetectionResult &r, const RenderedItem &item, Clock::time_point detected_at)
{
    bool stale = false;
    Clock::time_point done;
    {
        std::lock_guard lock(forward_mutex_);
        {
            std::lock_guard mlock(metrics_mutex_);
            for (const auto &sid : closed_)
                last_forwarded_.erase(sid);
            closed_.clear();
        }
        auto it = last_forwarded_.find(r.session_id);
        if (it != last_forwarded_.end() && r.snapshot_seq <= it->second) {
            stale = true;
        } else {
            last_forwarded_[r.session_id] = r.snapshot_seq;
            try {
                if (sink_)
                    sink_(r);
            } catch (const std::exception &e) {
                log_event({{"event", "sink_error"}, {"session", r.session_id}, {"error", e.what()}});
            }
        }
        done = Clock::now();
    }
    const double p_ms = ms_between(item.submitted_at, done);
    {
        std::lock_guard lock(metrics_mutex_);
        if (stale) {
            ++stale_;
        } else {
            ++completed_;
            p_time_sum_ms_ += p_ms;
            stages_["forward"].add(ms_between(detected_at, done));
        }
    }
    log_event({{"event", stale ? "stale" : "forwarded"},
               {"session", r.session_id},
               {"seq", r.snapshot_seq},
               {"boxes", r.boxes.size()},
               {"detect_ms", r.detect_ms},
               {"p_time_ms", p_ms}});
    settle(1);
}

void Pipeline::settle(std::uint64_t n)
{
    {
        std::lock_guard lock(metrics_mutex_);
        settled_ += n;
    }
    idle_cv_.notify_all();
}

bool Pipeline::wait_idle(std::chrono::milliseconds timeout)
{
    std::unique_lock lock(metrics_mutex_);
    return idle_cv_.wait_for(lock, timeout, [&] { return settled_ >= submitted_; });
}

MetricsSnapshot Pipeline::metrics() const
{
    MetricsSnapshot m;
    {
        std::lock_guard lock(metrics_mutex_);
        m.completed = completed_;
        m.p_time_ms = completed_ ? p_time_sum_ms_ / static_cast<double>(completed_) : 0.0;
        m.n_sess = n_sess_;
        m.active_sessions = active_.size();
        m.submitted = submitted_;
        m.superseded = superseded_;
        m.stale_results = stale_;
        m.detector_errors = errors_;
        m.stages = stages_;
    }
    m.canvas_queue = canvas_q_.stats();
    m.rendered_queue = rendered_q_.stats();
    return m;
}

void Pipeline::log_event(const nlohmann::json &j)
{
    if (!log_)
        return;
    nlohmann::json line = j;
    line["t_us"] = us_now();
    std::lock_guard lock(log_mutex_);
    *log_ << line.dump() << '\n';
}

} // namespace sketchwatch::pipeline
