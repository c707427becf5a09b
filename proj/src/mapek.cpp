#include "adaptloop/mapek.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

#include "adaptloop/error.hpp"

namespace adaptloop {

using nlohmann::ordered_json;

std::string_view to_string(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::above_threshold: return "above-threshold";
        case ConditionKind::below_threshold: return "below-threshold";
        case ConditionKind::unknown: return "unknown";
    }
    return "unknown";
}

std::string_view to_string(ExecAction action) {
    switch (action) {
        case ExecAction::apply: return "apply";
        case ExecAction::keep: return "keep";
        case ExecAction::fallback: return "fallback";
    }
    return "keep";
}

std::string_view to_string(ServiceKind kind) {
    switch (kind) {
        case ServiceKind::monitor: return "monitor";
        case ServiceKind::analyzer: return "analyzer";
        case ServiceKind::planner: return "planner";
        case ServiceKind::executor: return "executor";
        case ServiceKind::stream: return "stream";
    }
    return "stream";
}

MonitoredSample monitor_tick(const Environment& env, SimTime t, SimTime interval) {
    if (interval <= SimTime{} || t.micros() % interval.micros() != 0)
        throw Error(Errc::invalid_argument, fmt::format("t={}s is off the monitoring grid", t.seconds()));
    const SpeedSample s = probe(env.trace, env.faults, t, env.probe_noise_sd, env.seed);
    return {s.t, s.upload, s.ok};
}

Condition analyze(const MonitoredSample& sample, double threshold) {
    if (!(threshold > 0.0)) throw Error(Errc::invalid_argument, "threshold must be > 0");
    if (!sample.ok) return {ConditionKind::unknown, sample.t};
    return {sample.upload >= threshold ? ConditionKind::above_threshold : ConditionKind::below_threshold,
            sample.t};
}

std::optional<AdaptationStrategy> plan(const Condition& cond, const AdaptationSpace& space,
                                       std::string_view current, std::uint64_t next_id,
                                       const PlanPolicy& policy) {
    if (!space.contains(current))
        throw Error(Errc::unknown_config, "current config '" + std::string(current) + "' not in space");
    if (cond.kind == ConditionKind::unknown) return std::nullopt;

    const bool above = cond.kind == ConditionKind::above_threshold;
    const std::string& target = above ? policy.above : policy.below;
    space.at(target);
    if (target == current) return std::nullopt;
    return AdaptationStrategy{next_id, cond.at, target,
                              above ? StrategyReason::above_threshold : StrategyReason::below_threshold};
}

ExecutionResult execute(KnowledgeBase kb, StreamState stream, SimTime reconfig_delay,
                        bool registry_available) {
    if (!registry_available) return {std::move(kb), std::move(stream), ExecAction::fallback, std::nullopt};

    auto latest = fetch_latest_strategy(kb);
    if (!latest) return {std::move(kb), std::move(stream), ExecAction::keep, std::nullopt};

    if (latest->target == stream.effective()) {
        if (!kb.last_applied()) kb.set_last_applied(latest->target);
        return {std::move(kb), std::move(stream), ExecAction::keep, std::move(latest)};
    }
    stream = apply_config(std::move(stream), latest->target, reconfig_delay);
    kb.set_last_applied(latest->target);
    return {std::move(kb), std::move(stream), ExecAction::apply, std::move(latest)};
}

// --- registry ---------------------------------------------------------------

ServiceRecord* ServiceRegistry::find_registered(std::string_view name) {
    auto it = std::ranges::find_if(records_, [&](const ServiceRecord& r) { return r.registered && r.name == name; });
    return it == records_.end() ? nullptr : &*it;
}

void ServiceRegistry::register_service(ServiceRecord record) {
    if (find_registered(record.name))
        throw Error(Errc::duplicate_service, "'" + record.name + "' is already registered");
    record.registered = true;
    auto it = std::ranges::find(records_, record.name, &ServiceRecord::name);
    if (it != records_.end())
        *it = std::move(record);
    else
        records_.push_back(std::move(record));
}

void ServiceRegistry::deregister_service(std::string_view name) {
    auto* r = find_registered(name);
    if (!r) throw Error(Errc::unknown_service, "'" + std::string(name) + "' is not registered");
    r->registered = false;
}

void ServiceRegistry::heartbeat(std::string_view name, SimTime now) {
    auto* r = find_registered(name);
    if (!r) throw Error(Errc::unknown_service, "heartbeat from unregistered '" + std::string(name) + "'");
    r->last_heartbeat = std::max(r->last_heartbeat, now);
}

std::vector<ServiceRecord> ServiceRegistry::list_available(SimTime now, SimTime ttl) const {
    std::vector<ServiceRecord> out;
    for (const auto& r : records_)
        if (r.registered && now - r.last_heartbeat <= ttl) out.push_back(r);
    return out;
}

// --- events -----------------------------------------------------------------

namespace {

struct EventJson {
    ordered_json& j;

    void operator()(const StartEvent& e) const {
        j["kind"] = "start";
        j["scenario"] = e.scenario;
        j["initial"] = e.initial;
        j["threshold"] = e.threshold;
    }
    void operator()(const MonitorEvent& e) const {
        j["kind"] = "monitor";
        j["upload"] = e.upload;
        j["ok"] = e.ok;
    }
    void operator()(const AnalyzeEvent& e) const {
        j["kind"] = "analyze";
        j["condition"] = to_string(e.condition);
    }
    void operator()(const PlanEvent& e) const {
        j["kind"] = "plan";
        if (!e.strategy) {
            j["decision"] = "keep-current";
            return;
        }
        j["decision"] = "strategy";
        j["strategy_id"] = e.strategy->id;
        j["target"] = e.strategy->target;
        j["reason"] = to_string(e.strategy->reason);
        j["registered"] = e.registered;
    }
    void operator()(const ExecuteEvent& e) const {
        j["kind"] = "execute";
        j["action"] = to_string(e.action);
        j["strategy_id"] = e.strategy_id ? ordered_json(*e.strategy_id) : ordered_json(nullptr);
        j["target"] = e.target;
    }
    void operator()(const ReconfigCompleteEvent& e) const {
        j["kind"] = "reconfig-complete";
        j["config"] = e.config;
    }
    void operator()(const RunEndEvent& e) const {
        j["kind"] = "run-end";
        j["run"] = e.run;
    }
};

}  // namespace

ordered_json to_json(const Event& event) {
    ordered_json j;
    j["seq"] = event.seq;
    j["t"] = event.t.seconds();
    std::visit(EventJson{j}, event.body);
    return j;
}

void write_events_jsonl(std::span<const Event> events, std::ostream& out) {
    for (const auto& e : events) out << to_json(e).dump() << '\n';
}

// --- components -------------------------------------------------------------

Analyzer::Analyzer(double threshold, double band) : threshold_(threshold), band_(band) {
    if (!(threshold > 0.0)) throw Error(Errc::invalid_argument, "threshold must be > 0");
    if (band < 0.0) throw Error(Errc::invalid_argument, "hysteresis band must be >= 0");
}

void Analyzer::drain() {
    while (auto sample = in.pop()) {
        Condition c = analyze(*sample, threshold_);
        if (c.kind == ConditionKind::below_threshold && band_ > 0.0 &&
            last_decisive_ == ConditionKind::above_threshold && sample->upload >= threshold_ - band_) {
            c.kind = ConditionKind::above_threshold;
        }
        if (c.kind != ConditionKind::unknown) last_decisive_ = c.kind;
        out.push(c);
    }
}

Planner::Planner(const AdaptationSpace& space, PlanPolicy policy, std::string current)
    : space_(space), policy_(std::move(policy)), current_(std::move(current)) {}

std::optional<AdaptationStrategy> Planner::on_condition(const Condition& cond) {
    if (cond.kind != ConditionKind::unknown) last_decisive_ = cond;
    return plan(cond, space_, current_, next_id_, policy_);
}

std::optional<AdaptationStrategy> Planner::on_user_override(const UserOverride& ov) {
    policy_ = ov.policy;
    if (!last_decisive_) return std::nullopt;
    auto s = plan({last_decisive_->kind, ov.at}, space_, current_, next_id_, policy_);
    if (s) s->reason = StrategyReason::user_config;
    return s;
}

void Planner::confirm(const AdaptationStrategy& s) {
    current_ = s.target;
    next_id_ = s.id + 1;
}

// --- loop -------------------------------------------------------------------

namespace {

constexpr std::array<std::pair<std::string_view, ServiceKind>, 5> loop_services{{
    {"monitor", ServiceKind::monitor},
    {"analyzer", ServiceKind::analyzer},
    {"planner", ServiceKind::planner},
    {"executor", ServiceKind::executor},
    {"stream", ServiceKind::stream},
}};

void check_config(const LoopConfig& c) {
    std::vector<std::string> problems;
    if (c.runs < 1) problems.push_back("runs must be >= 1");
    if (c.run_duration <= SimTime{}) problems.push_back("run_duration must be > 0");
    if (c.monitor_interval <= SimTime{}) problems.push_back("monitor_interval must be > 0");
    if (c.reconfig_delay < SimTime{}) problems.push_back("reconfig_delay must be >= 0");
    if (!(c.threshold > 0.0)) problems.push_back("threshold must be > 0");
    if (c.hysteresis < 0.0) problems.push_back("hysteresis must be >= 0");
    auto need = [&](const std::string& name, std::string_view what) {
        if (!c.space.contains(name)) problems.push_back(fmt::format("{} '{}' is not in the adaptation space", what, name));
    };
    need(c.initial, "initial config");
    need(c.policy.above, "policy.above");
    need(c.policy.below, "policy.below");
    for (const auto& ov : c.user_overrides) {
        need(ov.policy.above, "user override above");
        need(ov.policy.below, "user override below");
    }
    if (c.runs >= 1 && c.run_duration > SimTime{} && c.env.trace.duration() < c.run_duration * c.runs)
        problems.push_back("trace is shorter than the experiment");
    if (!std::ranges::is_sorted(c.user_overrides, {}, &UserOverride::at))
        problems.push_back("user overrides must be in time order");
    if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
        throw Error(Errc::invalid_config, msg);
    }
}

}  // namespace

ControlLoop::ControlLoop(LoopConfig config) : cfg_(std::move(config)) {
    for (const auto& [name, kind] : loop_services) registry_.register_service({std::string(name), kind, true, {}});
}

void ControlLoop::emit(SimTime t, decltype(Event::body) body) {
    events_.push_back({events_.size(), t, std::move(body)});
}

void ControlLoop::require_services(SimTime now) const {
    const SimTime ttl = cfg_.monitor_interval * 2;
    const auto live = registry_.list_available(now, ttl);
    for (auto kind : {ServiceKind::monitor, ServiceKind::analyzer, ServiceKind::planner, ServiceKind::executor}) {
        if (std::ranges::find(live, kind, &ServiceRecord::kind) == live.end())
            throw Error(Errc::unknown_service, fmt::format("no live {} service at t={}s", to_string(kind), now.seconds()));
    }
}

LoopResult ControlLoop::run() {
    check_config(cfg_);
    require_services(SimTime{});

    events_.clear();
    next_override_ = 0;
    kb_ = KnowledgeBase{};
    kb_.set_threshold(cfg_.threshold);
    kb_.set_last_applied(cfg_.initial);
    stream_ = StreamState::start(cfg_.initial);

    Monitor monitor(cfg_.env, cfg_.monitor_interval);
    Analyzer analyzer(cfg_.threshold, cfg_.hysteresis);
    Planner planner(cfg_.space, cfg_.policy, cfg_.initial);
    std::vector<RunRecord> records;

    emit({}, StartEvent{cfg_.scenario, cfg_.initial, cfg_.threshold});

    auto submit = [&](SimTime t, const std::optional<AdaptationStrategy>& proposal) {
        if (!proposal) {
            emit(t, PlanEvent{});
            return;
        }
        const bool reachable = !cfg_.env.faults.active(FaultKind::registry_unavailable, t);
        if (reachable) {
            kb_ = register_strategy(std::move(kb_), *proposal);
            planner.confirm(*proposal);
        }
        emit(t, PlanEvent{proposal, reachable});
    };

    auto tick = [&](SimTime t) {
        require_services(t);

        while (next_override_ < cfg_.user_overrides.size() && cfg_.user_overrides[next_override_].at <= t) {
            if (auto s = planner.on_user_override(cfg_.user_overrides[next_override_])) submit(t, s);
            ++next_override_;
        }

        monitor.tick(t);
        registry_.heartbeat("monitor", t);
        const MonitoredSample sample = *monitor.out.pop();
        emit(t, MonitorEvent{sample.upload, sample.ok});

        analyzer.in.push(sample);
        analyzer.drain();
        registry_.heartbeat("analyzer", t);
        const Condition cond = *analyzer.out.pop();
        emit(t, AnalyzeEvent{cond.kind});

        submit(t, planner.on_condition(cond));
        registry_.heartbeat("planner", t);

        const bool reachable = !cfg_.env.faults.active(FaultKind::registry_unavailable, t);
        auto res = execute(std::move(kb_), std::move(stream_), cfg_.reconfig_delay, reachable);
        kb_ = std::move(res.kb);
        stream_ = std::move(res.stream);
        registry_.heartbeat("executor", t);

        ExecuteEvent ev{res.action, std::nullopt, {}};
        if (res.strategy) ev.strategy_id = res.strategy->id;
        ev.target = res.action == ExecAction::fallback ? kb_.last_applied().value_or(stream_.active)
                                                       : stream_.effective();
        emit(t, std::move(ev));
        if (res.action == ExecAction::apply && !stream_.pending) emit(t, ReconfigCompleteEvent{stream_.active});
    };

    const SimTime end = cfg_.run_duration * cfg_.runs;
    SimTime t;
    SimTime next_tick;
    SimTime next_boundary = cfg_.run_duration;
    int run_index = 0;
    while (t < end) {
        if (t == next_tick) {
            tick(t);
            next_tick += cfg_.monitor_interval;
        }
        const SimTime next = std::min(next_tick, next_boundary);
        const bool was_pending = stream_.pending.has_value();
        stream_ = step(std::move(stream_), next - t);
        registry_.heartbeat("stream", next);
        if (was_pending && !stream_.pending)
            emit(*stream_.reconfig_intervals.back().end, ReconfigCompleteEvent{stream_.active});
        t = next;

        if (t == next_boundary) {
            RunRecord rec = finalize_run(stream_, cfg_.scenario, run_index, cfg_.run_duration);
            kb_ = append_run_record(std::move(kb_), rec);
            records.push_back(std::move(rec));
            emit(t, RunEndEvent{run_index});
            stream_ = begin_next_run(std::move(stream_));
            ++run_index;
            next_boundary += cfg_.run_duration;
        }
    }
    return {std::move(records), std::move(events_), std::move(kb_)};
}

LoopResult run_loop(const LoopConfig& config) { return ControlLoop(config).run(); }

}  // namespace adaptloop
