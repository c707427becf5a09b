#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaptloop/kb.hpp"
#include "adaptloop/sim_time.hpp"

namespace adaptloop {

/// A reconfiguration interval; `end` is empty while the switch is in flight.
struct ReconfigInterval {
    SimTime start;
    std::optional<SimTime> end;

    bool operator==(const ReconfigInterval&) const = default;
};

/// The managed video stream.
///
/// `clock` is absolute simulation time; the per-run ledgers (`streamed`,
/// `reconfig_intervals`, `switches`) cover [run_start, clock). At any point
///
///     sum(streamed) + reconfiguring time in the run == clock - run_start
///
/// holds exactly. While a switch is pending nothing streams.
struct StreamState {
    std::string active;
    std::optional<std::string> pending;
    SimTime reconfig_remaining;
    SimTime clock;
    SimTime run_start;
    std::map<std::string, SimTime> streamed;
    std::vector<ReconfigInterval> reconfig_intervals;
    int switches = 0;

    static StreamState start(std::string initial, SimTime at = {});

    /// The configuration the stream is heading to: pending if any, else active.
    const std::string& effective() const { return pending ? *pending : active; }
    SimTime reconfig_in_run() const;

    bool operator==(const StreamState&) const = default;
};

/// Requests a switch to `target`.
///
/// Free when `target` is already active with nothing pending, or already the
/// pending target. A request during an in-flight switch replaces the pending
/// target without restarting the delay. A zero delay switches immediately.
StreamState apply_config(StreamState state, const std::string& target, SimTime reconfig_delay);

/// Advances the clock. Pending reconfiguration consumes dt first; the rest is
/// streamed at the (possibly new) active config. Throws on dt <= 0.
StreamState step(StreamState state, SimTime dt);

/// Closes the current run. Throws Errc::clock_mismatch unless exactly
/// `run_duration` elapsed since run_start. Open intervals are clipped.
RunRecord finalize_run(const StreamState& state, const std::string& scenario, int run_index,
                       SimTime run_duration);

/// Resets the per-run ledgers at the current clock. An in-flight switch
/// carries over as an interval opened at the boundary.
StreamState begin_next_run(StreamState state);

}  // namespace adaptloop
