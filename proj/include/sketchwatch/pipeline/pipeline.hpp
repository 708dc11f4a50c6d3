// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/detector.hpp"
#include "sketchwatch/pipeline/metrics.hpp"
#include "sketchwatch/pipeline/queue.hpp"
#include "sketchwatch/pipeline/result.hpp"
#include "sketchwatch/strokes/stroke.hpp"

#include <atomic>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <set>
#include <thread>
#include <vector>

namespace sketchwatch::pipeline {

struct PipelineConfig {
    std::size_t canvas_capacity = 256;
    std::size_t rendered_capacity = 64;
    int render_workers = 16;
    int detect_workers = 4;
    strokes::RenderConfig render{};

    void validate() const;
    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json &j);
};

struct CanvasItem {
    strokes::CanvasSnapshot snapshot;
    Clock::time_point submitted_at{};
};

struct RenderedItem {
    strokes::RenderedCanvas canvas;
    Clock::time_point submitted_at{};
    Clock::time_point dequeued_at{};
    Clock::time_point rendered_at{};
};

/// Rasterizes one snapshot. Identical to strokes::rasterize on the snapshot.
RenderedItem render_item(const CanvasItem &item, const strokes::RenderConfig &cfg);

/// Runs the detector with fault isolation: any exception becomes an error result.
DetectionResult detect_item(const RenderedItem &item, const detector::Detector &det, int detector_id);

using ResultSink = std::function<void(const DetectionResult &)>;

/// canvas queue -> render pool -> rendered queue -> detect pool -> ordered forwarder.
/// Results reach the sink in increasing snapshot_seq per session; late results
/// for an already-forwarded seq are counted as stale and not forwarded.
class Pipeline {
public:
    Pipeline(PipelineConfig cfg, std::shared_ptr<const detector::Detector> det, ResultSink sink,
             std::ostream *event_log = nullptr);
    ~Pipeline();
    Pipeline(const Pipeline &) = delete;
    Pipeline &operator=(const Pipeline &) = delete;

    void start();
    /// Stops intake, lets workers drain everything already queued, joins them.
    void stop();

    /// Enqueues with the ingress time. When the canvas queue is full, the oldest
    /// queued snapshot of the same session is superseded (the oldest overall when
    /// the session has none queued). Throws Error(invalid_argument) for an empty
    /// session id and Error(invalid_state) after stop().
    void submit(strokes::CanvasSnapshot snapshot);

    void session_opened(const std::string &session_id);
    void session_closed(const std::string &session_id);

    /// Blocks until every submitted snapshot has been forwarded, found stale or
    /// dropped. False on timeout.
    bool wait_idle(std::chrono::milliseconds timeout = std::chrono::milliseconds{60'000});

    MetricsSnapshot metrics() const;
    const PipelineConfig &config() const { return cfg_; }

private:
    void render_loop();
    void detect_loop(int id);
    void forward(const DetectionResult &r, const RenderedItem &item, Clock::time_point detected_at);
    void settle(std::uint64_t n);
    void log_event(const nlohmann::json &j);

    PipelineConfig cfg_;
    std::shared_ptr<const detector::Detector> det_;
    ResultSink sink_;
    std::ostream *log_;
    WorkQueue<CanvasItem> canvas_q_;
    WorkQueue<RenderedItem> rendered_q_;
    std::vector<std::thread> render_threads_;
    std::vector<std::thread> detect_threads_;
    std::atomic<bool> started_{false};
    std::atomic<bool> stopped_{false};

    mutable std::mutex forward_mutex_;
    std::map<std::string, std::uint64_t> last_forwarded_;

    mutable std::mutex metrics_mutex_;
    std::condition_variable idle_cv_;
    std::uint64_t submitted_ = 0;
    std::uint64_t settled_ = 0;
    std::uint64_t completed_ = 0;
    std::uint64_t superseded_ = 0;
    std::uint64_t stale_ = 0;
    std::uint64_t errors_ = 0;
    double p_time_sum_ms_ = 0.0;
    std::set<std::string> active_;
    std::vector<std::string> closed_; // awaiting purge from last_forwarded_
    std::size_t n_sess_ = 0;
    std::map<std::string, LatencyHistogram> stages_;

    std::mutex log_mutex_;
};

} // namespace sketchwatch::pipeline
