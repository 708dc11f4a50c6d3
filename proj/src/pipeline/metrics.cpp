// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/pipeline/metrics.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>
#include <sstream>

namespace sketchwatch::pipeline {

void LatencyHistogram::add(double ms)
{
    std::size_t i = 0;
    while (i < kBounds.size() && ms > kBounds[i])
        ++i;
    ++buckets_[i];
    ++count_;
    sum_ += ms;
    max_ = std::max(max_, ms);
}

std::array<std::uint64_t, LatencyHistogram::kBounds.size() + 1> LatencyHistogram::cumulative() const
{
    auto out = buckets_;
    for (std::size_t i = 1; i < out.size(); ++i)
        out[i] += out[i - 1];
    return out;
}

Tpr compute_tpr(double p_time_ms, std::size_t n_sess)
{
    if (!(p_time_ms > 0.0) || n_sess == 0)
        throw Error(Errc::invalid_argument, "tpr needs a positive p-time and at least one session");
    Tpr t;
    t.tpr_s = p_time_ms / 1000.0 / static_cast<double>(n_sess);
    t.rate_per_s = 1.0 / t.tpr_s;
    return t;
}

Tpr compute_tpr(const MetricsSnapshot &m)
{
    if (m.completed == 0)
        throw Error(Errc::invalid_state, "no completed items yet");
    return compute_tpr(m.p_time_ms, std::max<std::size_t>(m.n_sess, 1));
}

namespace {

void queue_lines(std::ostringstream &out, const char *name, const QueueStats &q)
{
    out << name << "_depth " << q.depth << '\n'
        << name << "_capacity " << q.capacity << '\n'
        << name << "_high_water " << q.high_water << '\n'
        << name << "_enqueued " << q.enqueued << '\n'
        << name << "_dequeued " << q.dequeued << '\n'
        << name << "_dropped " << q.dropped << '\n';
}

nlohmann::json queue_json(const QueueStats &q)
{
    return {{"depth", q.depth},       {"capacity", q.capacity}, {"high_water", q.high_water},
            {"enqueued", q.enqueued}, {"dequeued", q.dequeued}, {"dropped", q.dropped}};
}

} // namespace

std::string MetricsSnapshot::to_text() const
{
    std::ostringstream out;
    out << "p_time_ms " << p_time_ms << '\n' << "completed " << completed << '\n' << "n_sess " << n_sess << '\n';
    if (completed > 0) {
        const auto t = compute_tpr(*this);
        out << "tpr_s " << t.tpr_s << '\n' << "rate_per_s " << t.rate_per_s << '\n';
    }
    out << "active_sessions " << active_sessions << '\n'
        << "submitted " << submitted << '\n'
        << "superseded " << superseded << '\n'
        << "stale_results " << stale_results << '\n'
        << "detector_errors " << detector_errors << '\n';
    queue_lines(out, "canvas_queue", canvas_queue);
    queue_lines(out, "rendered_queue", rendered_queue);
    for (const auto &[name, h] : stages) {
        out << "stage_" << name << "_count " << h.count() << '\n'
            << "stage_" << name << "_mean_ms " << h.mean() << '\n'
            << "stage_" << name << "_max_ms " << h.max() << '\n';
        const auto cum = h.cumulative();
        for (std::size_t i = 0; i < LatencyHistogram::kBounds.size(); ++i)
            out << "stage_" << name << "_le_" << LatencyHistogram::kBounds[i] << "ms " << cum[i] << '\n';
    }
    return out.str();
}

nlohmann::json MetricsSnapshot::to_json() const
{
    nlohmann::json j{{"p_time_ms", p_time_ms},
                     {"completed", completed},
                     {"n_sess", n_sess},
                     {"active_sessions", active_sessions},
                     {"submitted", submitted},
                     {"superseded", superseded},
                     {"stale_results", stale_results},
                     {"detector_errors", detector_errors},
                     {"canvas_queue", queue_json(canvas_queue)},
                     {"rendered_queue", queue_json(rendered_queue)}};
    if (completed > 0) {
        const auto t = compute_tpr(*this);
        j["tpr_s"] = t.tpr_s;
        j["rate_per_s"] = t.rate_per_s;
    }
    auto &st = j["stages"] = nlohmann::json::object();
    for (const auto &[name, h] : stages)
        st[name] = {{"count", h.count()}, {"mean_ms", h.mean()}, {"max_ms", h.max()}};
    return j;
}

} // namespace sketchwatch::pipeline
