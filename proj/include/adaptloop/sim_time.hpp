#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace adaptloop {

/// Simulation time with microsecond resolution.
///
/// All clock arithmetic is integral so that streamed and reconfiguring time
/// add up to elapsed time exactly. Convert to seconds only at the edges.
class SimTime {
public:
    constexpr SimTime() = default;

    static constexpr SimTime from_micros(std::int64_t us) { return SimTime{us}; }
    static SimTime from_seconds(double s) { return SimTime{std::llround(s * 1e6)}; }

    constexpr std::int64_t micros() const { return us_; }
    constexpr double seconds() const { return static_cast<double>(us_) / 1e6; }

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime& operator+=(SimTime o) { us_ += o.us_; return *this; }
    constexpr SimTime& operator-=(SimTime o) { us_ -= o.us_; return *this; }
    friend constexpr SimTime operator+(SimTime a, SimTime b) { return a += b; }
    friend constexpr SimTime operator-(SimTime a, SimTime b) { return a -= b; }
    friend constexpr SimTime operator*(SimTime a, std::int64_t k) { return SimTime{a.us_ * k}; }
    friend constexpr std::int64_t operator/(SimTime a, SimTime b) { return a.us_ / b.us_; }

private:
    constexpr explicit SimTime(std::int64_t us) : us_(us) {}
    std::int64_t us_ = 0;
};

inline SimTime seconds(double s) { return SimTime::from_seconds(s); }

}  // namespace adaptloop
