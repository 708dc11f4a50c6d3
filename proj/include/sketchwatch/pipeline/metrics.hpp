// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/pipeline/queue.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

namespace sketchwatch::pipeline {

/// Fixed-bucket latency histogram in milliseconds.
class LatencyHistogram {
public:
    static constexpr std::array<double, 13> kBounds{0.5, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000};

    void add(double ms);
    std::uint64_t count() const { return count_; }
    double sum() const { return sum_; }
    double mean() const { return count_ ? sum_ / static_cast<double>(count_) : 0.0; }
    double max() const { return max_; }
    /// Cumulative counts per bound, then the overflow bucket (all samples).
    std::array<std::uint64_t, kBounds.size() + 1> cumulative() const;

private:
    std::array<std::uint64_t, kBounds.size() + 1> buckets_{};
    std::uint64_t count_ = 0;
    double sum_ = 0.0;
    double max_ = 0.0;
};

struct MetricsSnapshot {
    double p_time_ms = 0.0;      // mean submit-to-forward time over completed items
    std::uint64_t completed = 0; // results handed to the sink
    std::size_t n_sess = 0;      // most sessions open at once
    std::size_t active_sessions = 0;
    std::uint64_t submitted = 0;
    std::uint64_t superseded = 0;
    std::uint64_t stale_results = 0;
    std::uint64_t detector_errors = 0;
    QueueStats canvas_queue;
    QueueStats rendered_queue;
    std::map<std::string, LatencyHistogram> stages; // canvas_wait, render, rendered_wait, detect, forward

    /// One "key value" pair per line.
    std::string to_text() const;
    nlohmann::json to_json() const;
};

struct Tpr {
    double tpr_s = 0.0;      // seconds of processing per session
    double rate_per_s = 0.0; // 1 / tpr
};

/// tpr = (p_time_ms / 1000) / n_sess. Throws Error(invalid_argument) for
/// non-positive inputs.
Tpr compute_tpr(double p_time_ms, std::size_t n_sess);

/// Throws Error(invalid_state) when nothing has completed yet.
Tpr compute_tpr(const MetricsSnapshot &m);

} // namespace sketchwatch::pipeline
