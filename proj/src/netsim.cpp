#include "adaptloop/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "adaptloop/error.hpp"

namespace adaptloop {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double standard_normal(std::mt19937_64& rng) {
    // 53-bit uniforms; u1 in (0, 1] keeps the log finite.
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

BandwidthTrace generate_trace(const TraceParams& p, std::uint64_t seed) {
    if (!(p.mean_mbps > 0.0)) throw Error(Errc::invalid_argument, "trace mean must be > 0");
    if (!(p.step_s > 0.0)) throw Error(Errc::invalid_argument, "trace step must be > 0");
    if (!(p.duration_s >= p.step_s)) throw Error(Errc::invalid_argument, "trace duration must cover one step");
    if (!(p.period_s > 0.0)) throw Error(Errc::invalid_argument, "trace period must be > 0");
    if (p.amplitude_mbps < 0.0 || p.noise_sd_mbps < 0.0)
        throw Error(Errc::invalid_argument, "amplitude and noise must be non-negative");

    BandwidthTrace trace;
    trace.step = seconds(p.step_s);
    trace.seed = seed;
    const auto n = static_cast<std::size_t>(seconds(p.duration_s) / trace.step);
    trace.upload.reserve(n);

    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = trace.time_at(i).seconds();
        double v = p.mean_mbps + p.amplitude_mbps * std::sin(2.0 * std::numbers::pi * t / p.period_s);
        if (p.noise_sd_mbps > 0.0) v += p.noise_sd_mbps * standard_normal(rng);
        trace.upload.push_back(std::max(0.0, v));
    }
    return trace;
}

double bandwidth_at(const BandwidthTrace& trace, SimTime t) {
    if (t < SimTime{} || t >= trace.duration())
        throw Error(Errc::out_of_range, fmt::format("t={}s outside trace of {}s", t.seconds(),
                                                    trace.duration().seconds()));
    return trace.upload[static_cast<std::size_t>(t / trace.step)];
}

double compute_threshold(const BandwidthTrace& trace, SimTime start, SimTime end) {
    if (start < SimTime{} || end > trace.duration())
        throw Error(Errc::out_of_range, "warmup window exceeds the trace");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < trace.upload.size(); ++i) {
        const SimTime t = trace.time_at(i);
        if (t >= start && t < end) {
            sum += trace.upload[i];
            ++count;
        }
    }
    if (count == 0) throw Error(Errc::empty_window, "no samples in warmup window");
    return sum / static_cast<double>(count);
}

std::string_view to_string(FaultKind kind) {
    return kind == FaultKind::probe_unavailable ? "probe-unavailable" : "registry-unavailable";
}

FaultKind parse_fault_kind(std::string_view text) {
    if (text == "probe-unavailable") return FaultKind::probe_unavailable;
    if (text == "registry-unavailable") return FaultKind::registry_unavailable;
    throw Error(Errc::invalid_argument, "unknown fault kind '" + std::string(text) + "'");
}

FaultSchedule::FaultSchedule(std::vector<FaultWindow> windows) : windows_(std::move(windows)) {
    std::ranges::sort(windows_, {}, [](const FaultWindow& w) { return std::pair(w.kind, w.start); });
    for (std::size_t i = 0; i < windows_.size(); ++i) {
        const auto& w = windows_[i];
        if (!(w.start < w.end))
            throw Error(Errc::invalid_argument, fmt::format("fault window [{}, {}) is empty",
                                                            w.start.seconds(), w.end.seconds()));
        if (i > 0 && windows_[i - 1].kind == w.kind && windows_[i - 1].end > w.start)
            throw Error(Errc::invalid_argument,
                        fmt::format("{} windows overlap at {}s", to_string(w.kind), w.start.seconds()));
    }
}

bool FaultSchedule::active(FaultKind kind, SimTime t) const {
    return std::ranges::any_of(windows_, [&](const FaultWindow& w) {
        return w.kind == kind && w.start <= t && t < w.end;
    });
}

SimTime FaultSchedule::total(FaultKind kind) const {
    SimTime sum;
    for (const auto& w : windows_)
        if (w.kind == kind) sum += w.end - w.start;
    return sum;
}

SpeedSample probe(const BandwidthTrace& trace, const FaultSchedule& faults, SimTime t,
                  double probe_noise_sd, std::uint64_t seed) {
    const double truth = bandwidth_at(trace, t);
    if (faults.active(FaultKind::probe_unavailable, t)) return {t, 0.0, false};
    double v = truth;
    if (probe_noise_sd > 0.0) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t.micros())));
        v += probe_noise_sd * standard_normal(rng);
    }
    return {t, std::max(0.0, v), true};
}

void write_trace_csv(const BandwidthTrace& trace, std::ostream& out) {
    out << "t_seconds,upload_mbps\n";
    for (std::size_t i = 0; i < trace.upload.size(); ++i)
        out << fmt::format("{:.6f},{:.6f}\n", trace.time_at(i).seconds(), trace.upload[i]);
}

BandwidthTrace read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "t_seconds,upload_mbps")
        throw Error(Errc::invalid_argument, "trace csv must start with 't_seconds,upload_mbps'");

    std::vector<SimTime> times;
    BandwidthTrace trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error(Errc::invalid_argument, "bad trace row '" + line + "'");
        try {
            times.push_back(seconds(std::stod(line.substr(0, comma))));
            const double v = std::stod(line.substr(comma + 1));
            if (v < 0.0) throw Error(Errc::invalid_argument, "negative upload in '" + line + "'");
            trace.upload.push_back(v);
        } catch (const std::logic_error&) {
            throw Error(Errc::invalid_argument, "bad trace row '" + line + "'");
        }
    }
    if (times.size() < 2) throw Error(Errc::invalid_argument, "trace csv needs at least two rows");
    if (times.front() != SimTime{}) throw Error(Errc::invalid_argument, "trace must start at t=0");
    trace.step = times[1] - times[0];
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] - times[i - 1] != trace.step || !(trace.step > SimTime{}))
            throw Error(Errc::invalid_argument, "trace rows must use a constant positive step");
    return trace;
}

}  // namespace adaptloop
