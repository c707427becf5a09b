#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "adaptloop/kb.hpp"
#include "adaptloop/netsim.hpp"
#include "adaptloop/sim_time.hpp"
#include "adaptloop/stream.hpp"

namespace adaptloop {

// ---------------------------------------------------------------------------
// Messages and pure MAPE steps
// ---------------------------------------------------------------------------

struct MonitoredSample {
    SimTime t;
    double upload = 0.0;
    bool ok = false;

    bool operator==(const MonitoredSample&) const = default;
};

enum class ConditionKind { above_threshold, below_threshold, unknown };

std::string_view to_string(ConditionKind kind);

struct Condition {
    ConditionKind kind = ConditionKind::unknown;
    SimTime at;

    bool operator==(const Condition&) const = default;
};

/// The monitored world as seen by the speed-test service.
struct Environment {
    BandwidthTrace trace;
    FaultSchedule faults;
    double probe_noise_sd = 0.0;
    std::uint64_t seed = 0;
};

/// Probes the environment at a monitoring grid point. Faulted probes give
/// ok=false samples rather than errors.
MonitoredSample monitor_tick(const Environment& env, SimTime t, SimTime interval);

/// upload >= threshold is above; ok=false is unknown.
Condition analyze(const MonitoredSample& sample, double threshold);

/// Which configuration the planner targets for each condition.
struct PlanPolicy {
    std::string above = "HR";
    std::string below = "LR";

    bool operator==(const PlanPolicy&) const = default;
};

/// Returns a new strategy when the condition calls for a config other than
/// `current`, otherwise nullopt (keep-current). Unknown conditions never
/// trigger adaptation.
std::optional<AdaptationStrategy> plan(const Condition& cond, const AdaptationSpace& space,
                                       std::string_view current, std::uint64_t next_id,
                                       const PlanPolicy& policy = {});

enum class ExecAction { apply, keep, fallback };

std::string_view to_string(ExecAction action);

struct ExecutionResult {
    KnowledgeBase kb;
    StreamState stream;
    ExecAction action = ExecAction::keep;
    std::optional<AdaptationStrategy> strategy;  // the strategy acted on, if any
};

/// Pulls the latest strategy and applies it when it differs from where the
/// stream is heading. With the registry unavailable the stream keeps the
/// last applied configuration from the knowledge base.
ExecutionResult execute(KnowledgeBase kb, StreamState stream, SimTime reconfig_delay,
                        bool registry_available = true);

// ---------------------------------------------------------------------------
// Service registry
// ---------------------------------------------------------------------------

enum class ServiceKind { monitor, analyzer, planner, executor, stream };

std::string_view to_string(ServiceKind kind);

struct ServiceRecord {
    std::string name;
    ServiceKind kind = ServiceKind::stream;
    bool registered = true;
    SimTime last_heartbeat;

    bool operator==(const ServiceRecord&) const = default;
};

class ServiceRegistry {
public:
    /// Throws Errc::duplicate_service if the name is currently registered.
    void register_service(ServiceRecord record);
    /// Throws Errc::unknown_service if the name is not registered.
    void deregister_service(std::string_view name);
    void heartbeat(std::string_view name, SimTime now);

    /// Registered services with now - last_heartbeat <= ttl.
    std::vector<ServiceRecord> list_available(SimTime now, SimTime ttl) const;
    std::span<const ServiceRecord> records() const { return records_; }

private:
    ServiceRecord* find_registered(std::string_view name);
    std::vector<ServiceRecord> records_;
};

// ---------------------------------------------------------------------------
// Event log
// ---------------------------------------------------------------------------

struct StartEvent {
    std::string scenario;
    std::string initial;
    double threshold = 0.0;
};
struct MonitorEvent {
    double upload = 0.0;
    bool ok = false;
};
struct AnalyzeEvent {
    ConditionKind condition = ConditionKind::unknown;
};
struct PlanEvent {
    std::optional<AdaptationStrategy> strategy;  // nullopt = keep-current
    bool registered = false;
};
struct ExecuteEvent {
    ExecAction action = ExecAction::keep;
    std::optional<std::uint64_t> strategy_id;
    std::string target;
};
struct ReconfigCompleteEvent {
    std::string config;
};
struct RunEndEvent {
    int run = 0;
};

struct Event {
    std::uint64_t seq = 0;
    SimTime t;
    std::variant<StartEvent, MonitorEvent, AnalyzeEvent, PlanEvent, ExecuteEvent, ReconfigCompleteEvent,
                 RunEndEvent>
        body;
};

nlohmann::ordered_json to_json(const Event& event);
/// One JSON object per line.
void write_events_jsonl(std::span<const Event> events, std::ostream& out);

// ---------------------------------------------------------------------------
// Components and the loop
// ---------------------------------------------------------------------------

template <class T>
class Mailbox {
public:
    void push(T msg) { q_.push_back(std::move(msg)); }
    std::optional<T> pop() {
        if (q_.empty()) return std::nullopt;
        T msg = std::move(q_.front());
        q_.pop_front();
        return msg;
    }
    bool empty() const { return q_.empty(); }

private:
    std::deque<T> q_;
};

class Monitor {
public:
    Monitor(const Environment& env, SimTime interval) : env_(env), interval_(interval) {}
    void tick(SimTime t) { out.push(monitor_tick(env_, t, interval_)); }

    Mailbox<MonitoredSample> out;

private:
    const Environment& env_;
    SimTime interval_;
};

/// Threshold analysis with an optional downgrade band: a sample only reads
/// below-threshold once it drops under threshold - band, and then stays
/// below until it is back at or above the threshold. band = 0 is the bare
/// threshold rule.
class Analyzer {
public:
    Analyzer(double threshold, double band);
    void drain();

    Mailbox<MonitoredSample> in;
    Mailbox<Condition> out;

private:
    double threshold_;
    double band_;
    ConditionKind last_decisive_ = ConditionKind::above_threshold;
};

struct UserOverride {
    SimTime at;
    PlanPolicy policy;
};

/// Turns conditions into strategies. Tracks the target of the last
/// registered strategy so it never proposes the same target twice in a row.
class Planner {
public:
    Planner(const AdaptationSpace& space, PlanPolicy policy, std::string current);

    /// Returns the proposal for this condition, if any.
    std::optional<AdaptationStrategy> on_condition(const Condition& cond);
    /// Switches policy; re-plans against the last decisive condition.
    std::optional<AdaptationStrategy> on_user_override(const UserOverride& ov);

    /// The coordinator reports whether the proposal reached the registry.
    void confirm(const AdaptationStrategy& s);

    const std::string& current() const { return current_; }
    std::uint64_t next_id() const { return next_id_; }

private:
    const AdaptationSpace& space_;
    PlanPolicy policy_;
    std::string current_;
    std::uint64_t next_id_ = 1;
    std::optional<Condition> last_decisive_;
};

struct LoopConfig {
    std::string scenario = "adaptive";
    int runs = 100;
    SimTime run_duration = seconds(30);
    SimTime monitor_interval = seconds(1);
    SimTime reconfig_delay = seconds(2.7);
    AdaptationSpace space = AdaptationSpace::defaults();
    PlanPolicy policy;
    std::string initial = "HR";
    double threshold = 1.0;
    double hysteresis = 0.0;
    Environment env;
    std::vector<UserOverride> user_overrides;
};

struct LoopResult {
    std::vector<RunRecord> records;
    std::vector<Event> events;
    KnowledgeBase kb;
};

/// Coordinator for one experiment: owns the knowledge base, the service
/// registry and the stream, and moves messages between the four MAPE
/// components in a fixed order on the simulation clock.
class ControlLoop {
public:
    explicit ControlLoop(LoopConfig config);

    ServiceRegistry& registry() { return registry_; }

    /// Throws Errc::invalid_config on a bad configuration and
    /// Errc::unknown_service if a MAPE service is not available.
    LoopResult run();

private:
    void emit(SimTime t, decltype(Event::body) body);
    void require_services(SimTime now) const;

    LoopConfig cfg_;
    ServiceRegistry registry_;
    KnowledgeBase kb_;
    StreamState stream_;
    std::vector<Event> events_;
    std::size_t next_override_ = 0;
};

LoopResult run_loop(const LoopConfig& config);

}  // namespace adaptloop
