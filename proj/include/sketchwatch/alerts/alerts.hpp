// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sketchwatch/detector/box.hpp"
#include "sketchwatch/pipeline/result.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sketchwatch::alerts {

using detector::Category;
using detector::DetectionBox;
using pipeline::DetectionResult;

enum class RuleAction { RaiseViolation, RecordOnly };
std::string_view to_string(RuleAction a);

struct Rule {
    std::optional<Category> category; // empty matches everything
    RuleAction action = RuleAction::RecordOnly;
};

/// Ordered rules, first match wins. The last rule must match everything.
class RuleBase {
public:
    explicit RuleBase(std::vector<Rule> rules);
    /// Text raises a violation, everything else is recorded only.
    static RuleBase default_rules();

    RuleAction action_for(Category c) const;
    const std::vector<Rule> &rules() const { return rules_; }

    nlohmann::json to_json() const;
    static RuleBase from_json(const nlohmann::json &j);

private:
    std::vector<Rule> rules_;
};

enum class AlertKind { RuleViolation };
enum class AlertState { Raised, DismissedFalseAlarm };
std::string_view to_string(AlertKind k);
std::string_view to_string(AlertState s);

struct Alert {
    std::uint64_t alert_id = 0;
    std::string session_id;
    AlertKind kind = AlertKind::RuleViolation;
    std::vector<DetectionBox> boxes; // empty only for manual (Guesser-flagged) alerts
    std::int64_t raised_at_ms = 0;
    AlertState state = AlertState::Raised;
    bool manual = false;
    std::uint64_t snapshot_seq = 0;

    /// Wire payload: {alert_id, kind, boxes, ts, manual, state}.
    nlohmann::json to_json() const;
};

struct Outcome {
    std::uint64_t true_positive = 0;
    std::uint64_t false_positive = 0;
    std::uint64_t false_negative = 0;

    bool operator==(const Outcome &) const = default;
    nlohmann::json to_json() const;
};

/// Deployment-wide counters. Precision is tp / (tp + fp) and recall tp / (tp + fn);
/// both are 0 when their denominator is.
class OutcomeLedger {
public:
    void add(const Outcome &o);
    Outcome totals() const;
    double precision() const;
    double recall() const;
    nlohmann::json to_json() const;

private:
    mutable std::mutex mutex_;
    Outcome totals_;
};

struct TrackedBox {
    DetectionBox box;
    std::int64_t first_seen_ms = 0;
    std::int64_t last_seen_ms = 0;
    bool alerted = false;
    bool dismissed = false;
    std::uint64_t alert_id = 0;
};

/// One session's row of the record table.
struct SessionRecord {
    std::optional<std::uint64_t> last_seq;
    std::vector<TrackedBox> boxes;
    std::vector<Alert> alerts;
    std::uint64_t results = 0;
    std::uint64_t stale_dropped = 0;
    std::uint64_t failed_results = 0;
    std::uint64_t corroborations = 0;
    Outcome outcome; // fp and fn as they happen, tp at close
    bool closed = false;
};

struct FlagResult {
    bool corroborated = false;  // an alert was already active
    std::optional<Alert> manual; // raised to the Drawer when nothing was active
};

/// Record table, rule base and ledger. Calls for one session are serialized;
/// different sessions proceed in parallel.
class AlertEngine {
public:
    explicit AlertEngine(RuleBase rules = RuleBase::default_rules(), double dedup_iou = 0.5);

    /// Idempotent. Results for unknown sessions are rejected by ingest.
    void open_session(const std::string &session_id);

    /// Drops stale results (seq not above the last processed one) and results for
    /// closed sessions. Raises one alert per novel violating box: a box is novel when
    /// its IoU with every box that was ever alerted in the session is below the
    /// dedup threshold. Throws Error(unknown_session).
    std::vector<Alert> ingest(const DetectionResult &result, std::int64_t now_ms);

    /// Throws Error(not_found) for unknown ids and Error(invalid_state) when the
    /// alert is already dismissed or was raised manually.
    void false_alarm(const std::string &session_id, std::uint64_t alert_id);

    /// Throws Error(not_active) once the session is closed.
    FlagResult guesser_flag(const std::string &session_id, std::int64_t now_ms);

    /// Counts every raised automatic alert that was never dismissed as a true
    /// positive and returns the session's totals. A second close returns the same.
    Outcome session_close(const std::string &session_id);

    /// Drops a closed session's row.
    bool forget(const std::string &session_id);

    std::optional<SessionRecord> record(const std::string &session_id) const;
    const RuleBase &rules() const { return rules_; }
    OutcomeLedger &ledger() { return ledger_; }
    const OutcomeLedger &ledger() const { return ledger_; }
    std::uint64_t automatic_alerts() const;

private:
    struct Row {
        std::mutex mutex;
        SessionRecord rec;
    };
    std::shared_ptr<Row> find(const std::string &id) const;

    RuleBase rules_;
    double dedup_iou_;
    mutable std::mutex table_mutex_;
    std::map<std::string, std::shared_ptr<Row>> table_;
    mutable std::mutex id_mutex_;
    std::uint64_t next_alert_id_ = 1;
    std::uint64_t automatic_alerts_ = 0;
    OutcomeLedger ledger_;
};

} // namespace sketchwatch::alerts
