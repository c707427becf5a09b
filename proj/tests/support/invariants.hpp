#pragma once

// Structural checks over one loop result. Each returns human-readable
// violations; an empty vector means the invariant holds.

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "adaptloop/mapek.hpp"

namespace adaptloop::testing {

using Violations = std::vector<std::string>;

inline Violations check_time_conservation(const LoopResult& res, SimTime run_duration, int runs) {
    Violations v;
    if (static_cast<int>(res.records.size()) != runs)
        v.push_back(fmt::format("expected {} runs, got {}", runs, res.records.size()));
    for (const auto& r : res.records) {
        if (r.duration != run_duration) v.push_back(fmt::format("run {} duration off", r.run_index));
        if (r.streamed_total() + r.reconfig_total != r.duration)
            v.push_back(fmt::format("run {}: streamed + reconfig != duration", r.run_index));
        if (r.reconfig_total < SimTime{} || r.reconfig_total > r.duration)
            v.push_back(fmt::format("run {}: reconfig outside [0, duration]", r.run_index));
    }
    return v;
}

/// The registry holds exactly the registered proposals, in order, ids rising.
inline Violations check_append_only(const LoopResult& res) {
    Violations v;
    std::vector<AdaptationStrategy> registered;
    for (const auto& e : res.events)
        if (const auto* p = std::get_if<PlanEvent>(&e.body); p && p->strategy && p->registered)
            registered.push_back(*p->strategy);
    if (registered != res.kb.strategies()) v.push_back("registry differs from the registered plan events");
    for (std::size_t i = 1; i < res.kb.strategies().size(); ++i)
        if (res.kb.strategies()[i].id <= res.kb.strategies()[i - 1].id) v.push_back("strategy ids not increasing");
    if (res.kb.run_records() != res.records) v.push_back("knowledge base run records differ from the loop output");
    return v;
}

inline Violations check_no_redundant(const LoopResult& res, const std::string& initial) {
    Violations v;
    std::string prev = initial;
    for (const auto& s : res.kb.strategies()) {
        if (s.target == prev) v.push_back(fmt::format("strategy {} repeats target {}", s.id, s.target));
        prev = s.target;
    }
    return v;
}

/// Every apply refers to a distinct strategy registered earlier in the log;
/// every completed switch was preceded by an apply.
inline Violations check_causality(const LoopResult& res) {
    Violations v;
    std::map<std::uint64_t, SimTime> registered;
    std::set<std::uint64_t> applied;
    int applies_outstanding = 0;
    for (const auto& e : res.events) {
        if (const auto* p = std::get_if<PlanEvent>(&e.body); p && p->strategy && p->registered) {
            registered[p->strategy->id] = p->strategy->issued_at;
        } else if (const auto* x = std::get_if<ExecuteEvent>(&e.body); x && x->action == ExecAction::apply) {
            if (!x->strategy_id) {
                v.push_back(fmt::format("apply at {}s without a strategy", e.t.seconds()));
                continue;
            }
            auto it = registered.find(*x->strategy_id);
            if (it == registered.end() || it->second > e.t)
                v.push_back(fmt::format("apply of strategy {} at {}s has no earlier registration", *x->strategy_id,
                                        e.t.seconds()));
            if (!applied.insert(*x->strategy_id).second)
                v.push_back(fmt::format("strategy {} applied twice", *x->strategy_id));
            ++applies_outstanding;
        } else if (std::holds_alternative<ReconfigCompleteEvent>(e.body)) {
            if (applies_outstanding == 0) v.push_back(fmt::format("switch completed at {}s without an apply", e.t.seconds()));
            applies_outstanding = 0;
        }
    }
    return v;
}

/// During registry outages the executor only falls back, and planning
/// proposals are not registered.
inline Violations check_registry_outage(const LoopResult& res, const FaultSchedule& faults) {
    Violations v;
    for (const auto& e : res.events) {
        const bool down = faults.active(FaultKind::registry_unavailable, e.t);
        if (const auto* x = std::get_if<ExecuteEvent>(&e.body)) {
            if (down && x->action != ExecAction::fallback)
                v.push_back(fmt::format("executor did {} at {}s during an outage", to_string(x->action), e.t.seconds()));
            if (!down && x->action == ExecAction::fallback)
                v.push_back(fmt::format("fallback at {}s outside an outage", e.t.seconds()));
        } else if (const auto* p = std::get_if<PlanEvent>(&e.body); p && p->strategy && down && p->registered) {
            v.push_back(fmt::format("strategy {} registered during an outage", p->strategy->id));
        }
    }
    return v;
}

inline Violations check_all(const LoopResult& res, const LoopConfig& cfg) {
    Violations v;
    for (auto part : {check_time_conservation(res, cfg.run_duration, cfg.runs), check_append_only(res),
                      check_no_redundant(res, cfg.initial), check_causality(res),
                      check_registry_outage(res, cfg.env.faults)})
        v.insert(v.end(), part.begin(), part.end());
    return v;
}

}  // namespace adaptloop::testing
