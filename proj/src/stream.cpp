#include "adaptloop/stream.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "adaptloop/error.hpp"

namespace adaptloop {

StreamState StreamState::start(std::string initial, SimTime at) {
    StreamState s;
    s.active = std::move(initial);
    s.clock = at;
    s.run_start = at;
    return s;
}

SimTime StreamState::reconfig_in_run() const {
    SimTime total;
    for (const auto& iv : reconfig_intervals) total += iv.end.value_or(clock) - iv.start;
    return total;
}

StreamState apply_config(StreamState s, const std::string& target, SimTime delay) {
    if (delay < SimTime{}) throw Error(Errc::invalid_argument, "reconfiguration delay must be >= 0");
    if (target == s.effective()) return s;

    if (s.pending) {
        s.pending = target;
        return s;
    }
    ++s.switches;
    if (delay == SimTime{}) {
        s.reconfig_intervals.push_back({s.clock, s.clock});
        s.active = target;
        return s;
    }
    s.pending = target;
    s.reconfig_remaining = delay;
    s.reconfig_intervals.push_back({s.clock, std::nullopt});
    return s;
}

StreamState step(StreamState s, SimTime dt) {
    if (dt <= SimTime{}) throw Error(Errc::invalid_argument, "step needs dt > 0");
    SimTime left = dt;
    if (s.pending) {
        const SimTime used = std::min(left, s.reconfig_remaining);
        s.reconfig_remaining -= used;
        left -= used;
        if (s.reconfig_remaining == SimTime{}) {
            s.active = *s.pending;
            s.pending.reset();
            s.reconfig_intervals.back().end = s.clock + used;
        }
    }
    if (left > SimTime{}) s.streamed[s.active] += left;
    s.clock += dt;
    return s;
}

RunRecord finalize_run(const StreamState& s, const std::string& scenario, int run_index,
                       SimTime run_duration) {
    const SimTime elapsed = s.clock - s.run_start;
    if (elapsed != run_duration)
        throw Error(Errc::clock_mismatch, fmt::format("run {} lasted {}s, expected {}s", run_index,
                                                      elapsed.seconds(), run_duration.seconds()));
    RunRecord r;
    r.run_index = run_index;
    r.scenario = scenario;
    r.duration = elapsed;
    r.reconfig_total = s.reconfig_in_run();
    r.streamed = s.streamed;
    r.config_switches = s.switches;
    if (r.streamed_total() + r.reconfig_total != r.duration)
        throw Error(Errc::clock_mismatch, fmt::format("run {} time accounting is off", run_index));
    return r;
}

StreamState begin_next_run(StreamState s) {
    s.run_start = s.clock;
    s.streamed.clear();
    s.reconfig_intervals.clear();
    s.switches = 0;
    if (s.pending) s.reconfig_intervals.push_back({s.clock, std::nullopt});
    return s;
}

}  // namespace adaptloop
