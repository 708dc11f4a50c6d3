// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/server/service.hpp"

#include "sketchwatch/common/error.hpp"
#include "sketchwatch/detector/weights_io.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <thread>

namespace sketchwatch::server {

namespace {

std::string safe_name(std::string s)
{
    for (auto &c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.')
            c = '_';
    return s;
}

long parse_int(const char *name, const std::string &v, long lo, long hi)
{
    try {
        std::size_t used = 0;
        const long x = std::stol(v, &used);
        if (used == v.size() && x >= lo && x <= hi)
            return x;
    } catch (const std::exception &) {
    }
    throw Error(Errc::invalid_argument, std::string(name) + ": bad value '" + v + "'");
}

} // namespace

void ServiceConfig::validate() const
{
    if (capacity == 0)
        throw Error(Errc::invalid_argument, "capacity must be positive");
    relay.validate();
    pipeline.validate();
    nms.validate();
    if (session.time_limit_ms <= 0)
        throw Error(Errc::invalid_argument, "time_limit_ms must be positive");
    if (detector != "ink" && detector != "stub" && detector != "net")
        throw Error(Errc::invalid_argument, "detector must be ink, stub or net");
    if (detector == "net" && weights.empty())
        throw Error(Errc::invalid_argument, "detector 'net' needs a weights file");
    if (stub_latency_ms < 0)
        throw Error(Errc::invalid_argument, "stub_latency_ms must be non-negative");
}

nlohmann::json ServiceConfig::to_json() const
{
    nlohmann::json j{{"host", host},
                     {"port", port},
                     {"http_port", http_port ? nlohmann::json(*http_port) : nlohmann::json()},
                     {"capacity", capacity},
                     {"relay_ms", relay.min_interval_ms},
                     {"time_limit_ms", session.time_limit_ms},
                     {"auto_confirm", session.auto_confirm},
                     {"simplify_epsilon", session.simplify.epsilon},
                     {"pipeline", pipeline.to_json()},
                     {"detector", detector},
                     {"weights", weights},
                     {"score_threshold", nms.score_threshold},
                     {"nms_iou", nms.iou_threshold},
                     {"stub_latency_ms", stub_latency_ms},
                     {"records_dir", records_dir},
                     {"event_log", event_log}};
    if (!rules.is_null())
        j["rules"] = rules;
    return j;
}

ServiceConfig ServiceConfig::from_json(const nlohmann::json &j)
{
    if (!j.is_object())
        throw Error(Errc::malformed, "service config must be an object");
    ServiceConfig c;
    try {
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        if (j.contains("http_port"))
            c.http_port = j["http_port"].is_null() ? std::nullopt
                                                   : std::optional<std::uint16_t>(j["http_port"].get<std::uint16_t>());
        c.capacity = j.value("capacity", c.capacity);
        c.relay.min_interval_ms = j.value("relay_ms", c.relay.min_interval_ms);
        c.session.time_limit_ms = j.value("time_limit_ms", c.session.time_limit_ms);
        c.session.auto_confirm = j.value("auto_confirm", c.session.auto_confirm);
        c.session.simplify.epsilon = j.value("simplify_epsilon", c.session.simplify.epsilon);
        if (j.contains("pipeline"))
            c.pipeline = pipeline::PipelineConfig::from_json(j["pipeline"]);
        c.detector = j.value("detector", c.detector);
        c.weights = j.value("weights", c.weights);
        c.nms.score_threshold = j.value("score_threshold", c.nms.score_threshold);
        c.nms.iou_threshold = j.value("nms_iou", c.nms.iou_threshold);
        c.stub_latency_ms = j.value("stub_latency_ms", c.stub_latency_ms);
        c.records_dir = j.value("records_dir", c.records_dir);
        c.event_log = j.value("event_log", c.event_log);
        if (j.contains("rules"))
            c.rules = j["rules"];
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("service config: ") + e.what());
    }
    return c;
}

ServiceConfig ServiceConfig::load(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, "cannot open " + path);
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error &e) {
        throw Error(Errc::malformed, path + ": " + e.what());
    }
}

void ServiceConfig::apply_env(const std::function<const char *(const char *)> &getenv_fn)
{
    auto get = [&](const char *name) -> std::optional<std::string> {
        const char *v = getenv_fn ? getenv_fn(name) : std::getenv(name);
        if (!v || !*v)
            return std::nullopt;
        return std::string(v);
    };
    if (auto v = get("SKETCHWATCH_LISTEN")) {
        const auto colon = v->rfind(':');
        if (colon == std::string::npos)
            throw Error(Errc::invalid_argument, "SKETCHWATCH_LISTEN must be host:port");
        host = v->substr(0, colon);
        port = static_cast<std::uint16_t>(parse_int("SKETCHWATCH_LISTEN", v->substr(colon + 1), 0, 65535));
    }
    if (auto v = get("SKETCHWATCH_HTTP_PORT")) {
        const auto p = parse_int("SKETCHWATCH_HTTP_PORT", *v, -1, 65535);
        http_port = p < 0 ? std::nullopt : std::optional<std::uint16_t>(static_cast<std::uint16_t>(p));
    }
    if (auto v = get("SKETCHWATCH_CAPACITY"))
        capacity = static_cast<std::size_t>(parse_int("SKETCHWATCH_CAPACITY", *v, 1, 1'000'000));
    if (auto v = get("SKETCHWATCH_RELAY_MS"))
        relay.min_interval_ms = parse_int("SKETCHWATCH_RELAY_MS", *v, 1, 3'600'000);
    if (auto v = get("SKETCHWATCH_RECORDS_DIR"))
        records_dir = *v;
    if (auto v = get("SKETCHWATCH_DETECTOR"))
        detector = *v;
    if (auto v = get("SKETCHWATCH_WEIGHTS"))
        weights = *v;
}

std::shared_ptr<const detector::Detector> make_detector(const ServiceConfig &cfg)
{
    if (cfg.detector == "ink")
        return std::make_shared<detector::InkBoxDetector>();
    if (cfg.detector == "stub")
        return std::make_shared<detector::StubDetector>(
            std::vector<detector::DetectionBox>{},
            std::chrono::microseconds(static_cast<std::int64_t>(cfg.stub_latency_ms * 1000.0)));
    if (cfg.detector == "net") {
        auto net = detector::load_weights(cfg.weights);
        const int size = net.config().input_size;
        auto inner = std::make_shared<detector::NetDetector>(std::move(net), cfg.nms);
        return std::make_shared<detector::ResampledDetector>(std::move(inner), size);
    }
    throw Error(Errc::invalid_argument, "unknown detector '" + cfg.detector + "'");
}

struct Service::Http {
    httplib::Server server;
    std::thread thread;
};

Service::Service(ServiceConfig cfg, std::shared_ptr<const detector::Detector> det)
    : cfg_(std::move(cfg)), registry_(cfg_.capacity),
      alerts_(cfg_.rules.is_null() ? alerts::RuleBase::default_rules() : alerts::RuleBase::from_json(cfg_.rules))
{
    cfg_.validate();
    if (!det)
        det = make_detector(cfg_);
    if (!cfg_.event_log.empty()) {
        log_file_ = std::make_unique<std::ofstream>(cfg_.event_log, std::ios::app);
        if (!*log_file_)
            throw Error(Errc::io, "cannot open event log " + cfg_.event_log);
    }
    if (!cfg_.records_dir.empty())
        std::filesystem::create_directories(cfg_.records_dir);

    pipeline_ = std::make_unique<pipeline::Pipeline>(
        cfg_.pipeline, std::move(det), [this](const pipeline::DetectionResult &r) { on_result(r); }, log_file_.get());

    gateway::GatewayConfig gcfg;
    gcfg.relay = cfg_.relay;
    gcfg.session = cfg_.session;
    gateway::GatewayHooks hooks;
    hooks.on_snapshot = [this](const strokes::CanvasSnapshot &s) {
        try {
            pipeline_->submit(s);
        } catch (const Error &) {
            // Stopping; the snapshot has nowhere to go.
        }
    };
    hooks.on_session_start = [this](const std::string &sid) { pipeline_->session_opened(sid); };
    hooks.on_session_end = [this](const std::string &sid, const nlohmann::json &rec) { on_session_end(sid, rec); };
    core_ = std::make_unique<gateway::GatewayCore>(registry_, alerts_, gcfg, std::move(hooks));

    gateway::TcpOptions topts;
    topts.host = cfg_.host;
    topts.port = cfg_.port;
    tcp_ = std::make_unique<gateway::TcpServer>(*core_, topts);
}

Service::~Service() { stop(); }

void Service::on_result(const pipeline::DetectionResult &r)
{
    const auto now = gateway::steady_ms();
    auto raised = alerts_.ingest(r, now);
    if (raised.empty())
        return;
    tcp_->send(core_->deliver_alerts(raised, now));
}

void Service::on_session_end(const std::string &sid, const nlohmann::json &record)
{
    pipeline_->session_closed(sid);
    alerts_.forget(sid);
    if (!cfg_.records_dir.empty()) {
        const auto path = std::filesystem::path(cfg_.records_dir) / (safe_name(sid) + ".json");
        std::ofstream out(path);
        out << record.dump(2) << '\n';
    }
    std::lock_guard lock(records_mutex_);
    records_.push_back(record);
}

std::vector<nlohmann::json> Service::records() const
{
    std::lock_guard lock(records_mutex_);
    return records_;
}

std::optional<nlohmann::json> Service::session_log(const std::string &session_id) const
{
    if (auto live = registry_.snapshot(session_id))
        return live->to_record();
    std::lock_guard lock(records_mutex_);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it)
        if (it->value("session_id", "") == session_id)
            return *it;
    return std::nullopt;
}

std::uint16_t Service::port() const { return tcp_->port(); }

std::string Service::metrics_text() const
{
    auto m = pipeline_->metrics().to_text();
    const auto t = alerts_.ledger().totals();
    m += "ledger_tp " + std::to_string(t.true_positive) + "\n";
    m += "ledger_fp " + std::to_string(t.false_positive) + "\n";
    m += "ledger_fn " + std::to_string(t.false_negative) + "\n";
    m += "live_sessions " + std::to_string(registry_.live_count()) + "\n";
    return m;
}

void Service::start()
{
    if (running_)
        return;
    pipeline_->start();
    tcp_->start();
    if (cfg_.http_port) {
        http_ = std::make_unique<Http>();
        auto &srv = http_->server;
        srv.Get("/metrics", [this](const httplib::Request &, httplib::Response &res) {
            res.set_content(metrics_text(), "text/plain");
        });
        srv.Get("/metrics.json", [this](const httplib::Request &, httplib::Response &res) {
            res.set_content(pipeline_->metrics().to_json().dump(), "application/json");
        });
        srv.Get("/ledger", [this](const httplib::Request &, httplib::Response &res) {
            res.set_content(alerts_.ledger().to_json().dump(), "application/json");
        });
        srv.Get("/healthz", [](const httplib::Request &, httplib::Response &res) { res.set_content("ok", "text/plain"); });
        const int bound = *cfg_.http_port == 0 ? srv.bind_to_any_port(cfg_.host)
                                                : (srv.bind_to_port(cfg_.host, *cfg_.http_port) ? *cfg_.http_port : -1);
        if (bound < 0) {
            tcp_->stop();
            pipeline_->stop();
            throw Error(Errc::io, "cannot bind HTTP port " + std::to_string(*cfg_.http_port));
        }
        http_bound_ = static_cast<std::uint16_t>(bound);
        http_->thread = std::thread([this] { http_->server.listen_after_bind(); });
    }
    running_ = true;
}

void Service::stop()
{
    if (!running_)
        return;
    running_ = false;
    if (http_) {
        http_->server.stop();
        if (http_->thread.joinable())
            http_->thread.join();
        http_.reset();
    }
    tcp_->stop();
    pipeline_->stop();
}

} // namespace sketchwatch::server
