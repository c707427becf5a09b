#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "adaptloop/sim_time.hpp"

namespace adaptloop {

/// Mixes a base seed with a stream id (splitmix64 finalizer). Used to carve
/// disjoint, reproducible random streams out of one experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Standard normal variate via Box-Muller on raw engine output. Unlike
/// std::normal_distribution this is bit-identical across standard libraries.
double standard_normal(std::mt19937_64& rng);

/// Upload bandwidth sampled on a fixed grid starting at t = 0.
struct BandwidthTrace {
    SimTime step;
    std::uint64_t seed = 0;
    std::vector<double> upload;  // Mbps, one per step

    SimTime duration() const { return step * static_cast<std::int64_t>(upload.size()); }
    SimTime time_at(std::size_t i) const { return step * static_cast<std::int64_t>(i); }

    bool operator==(const BandwidthTrace&) const = default;
};

struct TraceParams {
    double mean_mbps = 5.0;
    double amplitude_mbps = 0.0;
    double period_s = 60.0;
    double noise_sd_mbps = 0.0;
    double duration_s = 3000.0;
    double step_s = 1.0;
};

/// upload(t) = max(0, mean + amplitude*sin(2*pi*t/period) + N(0, noise_sd)).
BandwidthTrace generate_trace(const TraceParams& params, std::uint64_t seed);

/// Piecewise-constant, left-closed lookup. Throws Errc::out_of_range.
double bandwidth_at(const BandwidthTrace& trace, SimTime t);

/// Mean of the samples with start <= t < end. Throws Errc::empty_window.
double compute_threshold(const BandwidthTrace& trace, SimTime start, SimTime end);

enum class FaultKind { probe_unavailable, registry_unavailable };

std::string_view to_string(FaultKind kind);
FaultKind parse_fault_kind(std::string_view text);

/// Half-open window [start, end).
struct FaultWindow {
    SimTime start;
    SimTime end;
    FaultKind kind = FaultKind::probe_unavailable;

    bool operator==(const FaultWindow&) const = default;
};

class FaultSchedule {
public:
    FaultSchedule() = default;
    /// Throws Errc::invalid_argument on an empty window or same-kind overlap.
    explicit FaultSchedule(std::vector<FaultWindow> windows);

    bool active(FaultKind kind, SimTime t) const;
    SimTime total(FaultKind kind) const;
    std::span<const FaultWindow> windows() const { return windows_; }

private:
    std::vector<FaultWindow> windows_;
};

struct SpeedSample {
    SimTime t;
    double upload = 0.0;
    bool ok = false;

    bool operator==(const SpeedSample&) const = default;
};

/// Speed test at time t. The noise draw is a pure function of (seed, t).
SpeedSample probe(const BandwidthTrace& trace, const FaultSchedule& faults, SimTime t,
                  double probe_noise_sd, std::uint64_t seed);

/// CSV with header `t_seconds,upload_mbps`.
void write_trace_csv(const BandwidthTrace& trace, std::ostream& out);
BandwidthTrace read_trace_csv(std::istream& in);

}  // namespace adaptloop
