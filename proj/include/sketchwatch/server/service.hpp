// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/alerts/alerts.hpp"
#include "sketchwatch/detector/detector.hpp"
#include "sketchwatch/gamecore/registry.hpp"
#include "sketchwatch/gateway/core.hpp"
#include "sketchwatch/gateway/tcp.hpp"
#include "sketchwatch/pipeline/pipeline.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace sketchwatch::server {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 7400;
    std::optional<std::uint16_t> http_port = 7401; // nullopt disables the HTTP endpoint
    std::size_t capacity = 50;
    gateway::RelayPolicy relay{};
    gamecore::SessionOptions session{};
    pipeline::PipelineConfig pipeline{};
    std::string detector = "ink"; // ink | stub | net
    std::string weights;          // model file for "net"
    detector::NmsConfig nms{};
    double stub_latency_ms = 1.0;
    std::string records_dir;      // empty: records are kept in memory only
    std::string event_log;        // JSON-lines pipeline events; empty disables
    nlohmann::json rules;         // rule base; null means the default

    void validate() const;
    nlohmann::json to_json() const;
    /// Missing keys keep their defaults. Throws Error(malformed).
    static ServiceConfig from_json(const nlohmann::json &j);
    static ServiceConfig load(const std::string &path);

    /// Applies SKETCHWATCH_LISTEN (host:port), SKETCHWATCH_HTTP_PORT (-1 disables, 0 picks a free port),
    /// SKETCHWATCH_CAPACITY, SKETCHWATCH_RELAY_MS, SKETCHWATCH_RECORDS_DIR,
    /// SKETCHWATCH_DETECTOR and SKETCHWATCH_WEIGHTS. `getenv` is injectable for tests.
    void apply_env(const std::function<const char *(const char *)> &getenv = nullptr);
};

/// Builds the detector named in the config. Throws Error(invalid_argument, io).
std::shared_ptr<const detector::Detector> make_detector(const ServiceConfig &cfg);

/// The whole server: gateway transport, game registry, monitoring pipeline and
/// alert engine, plus an optional HTTP endpoint for metrics and the ledger.
class Service {
public:
    /// `det` overrides the configured detector.
    explicit Service(ServiceConfig cfg, std::shared_ptr<const detector::Detector> det = nullptr);
    ~Service();
    Service(const Service &) = delete;
    Service &operator=(const Service &) = delete;

    void start();
    void stop();

    std::uint16_t port() const;
    std::optional<std::uint16_t> http_port() const { return http_bound_; }

    pipeline::MetricsSnapshot metrics() const { return pipeline_->metrics(); }
    std::string metrics_text() const;
    alerts::AlertEngine &alerts() { return alerts_; }
    gamecore::SessionRegistry &registry() { return registry_; }
    gateway::GatewayCore &core() { return *core_; }
    pipeline::Pipeline &pipeline() { return *pipeline_; }

    /// Records of finished sessions, oldest first.
    std::vector<nlohmann::json> records() const;
    /// Log of a live session or the stored record of a finished one.
    std::optional<nlohmann::json> session_log(const std::string &session_id) const;

    const ServiceConfig &config() const { return cfg_; }

private:
    void on_result(const pipeline::DetectionResult &r);
    void on_session_end(const std::string &sid, const nlohmann::json &record);

    struct Http;

    ServiceConfig cfg_;
    gamecore::SessionRegistry registry_;
    alerts::AlertEngine alerts_;
    std::unique_ptr<std::ofstream> log_file_;
    std::unique_ptr<pipeline::Pipeline> pipeline_;
    std::unique_ptr<gateway::GatewayCore> core_;
    std::unique_ptr<gateway::TcpServer> tcp_;
    std::unique_ptr<Http> http_;
    std::optional<std::uint16_t> http_bound_;

    mutable std::mutex records_mutex_;
    std::vector<nlohmann::json> records_;
    bool running_ = false;
};

} // namespace sketchwatch::server
