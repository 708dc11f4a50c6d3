// SPDX-License-Identifier: Apache-2.0
#include "sketchwatch/alerts/alerts.hpp"

#include "sketchwatch/common/error.hpp"

#include <algorithm>

namespace sketchwatch::alerts {

std::string_view to_string(RuleAction a)
{
    return a == RuleAction::RaiseViolation ? "raise_violation" : "record_only";
}

std::string_view to_string(AlertKind) { return "rule_violation"; }

std::string_view to_string(AlertState s) { return s == AlertState::Raised ? "raised" : "dismissed_false_alarm"; }

RuleBase::RuleBase(std::vector<Rule> rules) : rules_(std::move(rules))
{
    if (rules_.empty() || rules_.back().category)
        throw Error(Errc::invalid_argument, "the last rule must match every category");
}

RuleBase RuleBase::default_rules()
{
    return RuleBase({{Category::Text, RuleAction::RaiseViolation}, {std::nullopt, RuleAction::RecordOnly}});
}

RuleAction RuleBase::action_for(Category c) const
{
    for (const auto &r : rules_)
        if (!r.category || *r.category == c)
            return r.action;
    return RuleAction::RecordOnly; // unreachable: the constructor demands a catch-all
}

nlohmann::json RuleBase::to_json() const
{
    auto j = nlohmann::json::array();
    for (const auto &r : rules_)
        j.push_back({{"category", r.category ? nlohmann::json(std::string(detector::to_string(*r.category)))
                                             : nlohmann::json("*")},
                     {"action", to_string(r.action)}});
    return j;
}

RuleBase RuleBase::from_json(const nlohmann::json &j)
{
    try {
        std::vector<Rule> rules;
        for (const auto &e : j) {
            Rule r;
            const auto cat = e.at("category").get<std::string>();
            if (cat != "*")
                r.category = detector::category_from_string(cat);
            const auto act = e.at("action").get<std::string>();
            if (act == "raise_violation")
                r.action = RuleAction::RaiseViolation;
            else if (act == "record_only")
                r.action = RuleAction::RecordOnly;
            else
                throw Error(Errc::malformed, "unknown rule action '" + act + "'");
            rules.push_back(r);
        }
        return RuleBase(std::move(rules));
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::malformed, std::string("bad rule base: ") + e.what());
    }
}

nlohmann::json Alert::to_json() const
{
    auto b = nlohmann::json::array();
    for (const auto &box : boxes)
        b.push_back(detector::to_json(box));
    return {{"alert_id", alert_id}, {"kind", to_string(kind)}, {"boxes", b},         {"ts", raised_at_ms},
            {"manual", manual},     {"state", to_string(state)}, {"snapshot_seq", snapshot_seq}};
}

nlohmann::json Outcome::to_json() const
{
    return {{"tp", true_positive}, {"fp", false_positive}, {"fn", false_negative}};
}

void OutcomeLedger::add(const Outcome &o)
{
    std::lock_guard lock(mutex_);
    totals_.true_positive += o.true_positive;
    totals_.false_positive += o.false_positive;
    totals_.false_negative += o.false_negative;
}

Outcome OutcomeLedger::totals() const
{
    std::lock_guard lock(mutex_);
    return totals_;
}

double OutcomeLedger::precision() const
{
    const auto t = totals();
    const auto d = t.true_positive + t.false_positive;
    return d ? static_cast<double>(t.true_positive) / static_cast<double>(d) : 0.0;
}

double OutcomeLedger::recall() const
{
    const auto t = totals();
    const auto d = t.true_positive + t.false_negative;
    return d ? static_cast<double>(t.true_positive) / static_cast<double>(d) : 0.0;
}

nlohmann::json OutcomeLedger::to_json() const
{
    const auto t = totals();
    return {{"true_positive", t.true_positive},
            {"false_positive", t.false_positive},
            {"false_negative", t.false_negative},
            {"precision", precision()},
            {"recall", recall()}};
}

AlertEngine::AlertEngine(RuleBase rules, double dedup_iou) : rules_(std::move(rules)), dedup_iou_(dedup_iou)
{
    if (!(dedup_iou > 0.0 && dedup_iou <= 1.0))
        throw Error(Errc::invalid_argument, "dedup IoU must be in (0, 1]");
}

void AlertEngine::open_session(const std::string &session_id)
{
    std::lock_guard lock(table_mutex_);
    table_.try_emplace(session_id, std::make_shared<Row>());
}

std::shared_ptr<AlertEngine::Row> AlertEngine::find(const std::string &id) const
{
    std::lock_guard lock(table_mutex_);
    auto it = table_.find(id);
    if (it == table_.end())
        throw Error(Errc::unknown_session, "no alert record for session '" + id + "'");
    return it->second;
}

std::vector<Alert> AlertEngine::ingest(const DetectionResult &result, std::int64_t now_ms)
{
    auto row = find(result.session_id);
    std::lock_guard lock(row->mutex);
    auto &rec = row->rec;
    if (rec.closed || (rec.last_seq && result.snapshot_seq <= *rec.last_seq)) {
        ++rec.stale_dropped;
        return {};
    }
    rec.last_seq = result.snapshot_seq;
    ++rec.results;
    if (result.error) {
        ++rec.failed_results;
        return {};
    }

    std::vector<Alert> raised;
    for (const auto &box : result.boxes) {
        if (rules_.action_for(box.category) == RuleAction::RaiseViolation) {
            const bool seen = std::any_of(rec.boxes.begin(), rec.boxes.end(), [&](const TrackedBox &t) {
                return t.alerted && detector::iou(t.box, box) >= dedup_iou_;
            });
            if (!seen) {
                Alert a;
                {
                    std::lock_guard id_lock(id_mutex_);
                    a.alert_id = next_alert_id_++;
                    ++automatic_alerts_;
                }
                a.session_id = result.session_id;
                a.boxes = {box};
                a.raised_at_ms = now_ms;
                a.snapshot_seq = result.snapshot_seq;
                rec.boxes.push_back({box, now_ms, now_ms, true, false, a.alert_id});
                rec.alerts.push_back(a);
                raised.push_back(std::move(a));
                continue;
            }
        }
        auto it = std::find_if(rec.boxes.begin(), rec.boxes.end(), [&](const TrackedBox &t) {
            return t.box.category == box.category && detector::iou(t.box, box) >= dedup_iou_;
        });
        if (it != rec.boxes.end())
            it->last_seen_ms = now_ms;
        else
            rec.boxes.push_back({box, now_ms, now_ms, false, false, 0});
    }
    return raised;
}

void AlertEngine::false_alarm(const std::string &session_id, std::uint64_t alert_id)
{
    auto row = find(session_id);
    std::lock_guard lock(row->mutex);
    auto &rec = row->rec;
    auto it = std::find_if(rec.alerts.begin(), rec.alerts.end(),
                           [&](const Alert &a) { return a.alert_id == alert_id; });
    if (it == rec.alerts.end())
        throw Error(Errc::not_found, "no alert " + std::to_string(alert_id) + " in session '" + session_id + "'");
    if (it->state != AlertState::Raised)
        throw Error(Errc::invalid_state, "alert " + std::to_string(alert_id) + " is already dismissed");
    if (it->manual)
        throw Error(Errc::invalid_state, "manual alerts cannot be dismissed as false alarms");
    if (rec.closed)
        throw Error(Errc::not_active, "session '" + session_id + "' is closed");
    it->state = AlertState::DismissedFalseAlarm;
    for (auto &t : rec.boxes)
        if (t.alert_id == alert_id)
            t.dismissed = true;
    ++rec.outcome.false_positive;
    ledger_.add({0, 1, 0});
}

FlagResult AlertEngine::guesser_flag(const std::string &session_id, std::int64_t now_ms)
{
    auto row = find(session_id);
    std::lock_guard lock(row->mutex);
    auto &rec = row->rec;
    if (rec.closed)
        throw Error(Errc::not_active, "session '" + session_id + "' is closed");
    FlagResult out;
    const bool active = std::any_of(rec.alerts.begin(), rec.alerts.end(),
                                    [](const Alert &a) { return a.state == AlertState::Raised; });
    if (active) {
        ++rec.corroborations;
        out.corroborated = true;
        return out;
    }
    Alert a;
    {
        std::lock_guard id_lock(id_mutex_);
        a.alert_id = next_alert_id_++;
    }
    a.session_id = session_id;
    a.raised_at_ms = now_ms;
    a.manual = true;
    a.snapshot_seq = rec.last_seq.value_or(0);
    rec.alerts.push_back(a);
    ++rec.outcome.false_negative;
    ledger_.add({0, 0, 1});
    out.manual = std::move(a);
    return out;
}

Outcome AlertEngine::session_close(const std::string &session_id)
{
    auto row = find(session_id);
    std::lock_guard lock(row->mutex);
    auto &rec = row->rec;
    if (rec.closed)
        return rec.outcome;
    rec.closed = true;
    std::uint64_t tp = 0;
    for (const auto &a : rec.alerts)
        if (!a.manual && a.state == AlertState::Raised)
            ++tp;
    rec.outcome.true_positive = tp;
    ledger_.add({tp, 0, 0});
    return rec.outcome;
}

bool AlertEngine::forget(const std::string &session_id)
{
    std::lock_guard lock(table_mutex_);
    auto it = table_.find(session_id);
    if (it == table_.end())
        return false;
    {
        std::lock_guard row_lock(it->second->mutex);
        if (!it->second->rec.closed)
            return false;
    }
    table_.erase(it);
    return true;
}

std::optional<SessionRecord> AlertEngine::record(const std::string &session_id) const
{
    std::shared_ptr<Row> row;
    {
        std::lock_guard lock(table_mutex_);
        auto it = table_.find(session_id);
        if (it == table_.end())
            return std::nullopt;
        row = it->second;
    }
    std::lock_guard lock(row->mutex);
    return row->rec;
}

std::uint64_t AlertEngine::automatic_alerts() const
{
    std::lock_guard lock(id_mutex_);
    return automatic_alerts_;
}

} // namespace sketchwatch::alerts
