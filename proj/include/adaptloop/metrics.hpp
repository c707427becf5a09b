#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "adaptloop/kb.hpp"

namespace adaptloop {

/// Relative importance of frame rate vs frame quality; sums to one.
struct QualityWeights {
    double w_rate = 0.5;
    double w_frame = 0.5;
};

/// Relative importance of time vs quality performance; sums to one.
struct PerformanceWeights {
    double w_t = 0.5;
    double w_q = 0.5;
};

void validate(const QualityWeights& qw);
void validate(const PerformanceWeights& pw);

struct QualityPreset {
    std::string_view label;
    QualityWeights weights;
};

struct PerformancePreset {
    std::string_view label;
    PerformanceWeights weights;
};

inline constexpr std::array<QualityPreset, 3> quality_presets{{
    {"5r5q", {0.5, 0.5}},
    {"9r1q", {0.9, 0.1}},
    {"1r9q", {0.1, 0.9}},
}};

inline constexpr std::array<PerformancePreset, 3> performance_presets{{
    {"p1", {0.5, 0.5}},
    {"p2", {0.9, 0.1}},
    {"p3", {0.1, 0.9}},
}};

/// tp(r) = 1 - reconfiguration time / duration.
double time_performance(const RunRecord& record);

/// w_rate * fps / max_fps + w_frame * quality_score.
double config_quality_score(const StreamConfig& config, const AdaptationSpace& space,
                            const QualityWeights& qw);

/// Streamed-time-weighted mean of config_quality_score. The maximum quality
/// is the best score (1.0) over the seconds that actually streamed, so
/// reconfiguration time lowers tp but not qp.
double quality_performance(const RunRecord& record, const AdaptationSpace& space,
                           const QualityWeights& qw);

/// w_t * tp + w_q * qp.
double system_performance(double tp, double qp, const PerformanceWeights& pw);

struct PresetCell {
    double qp = 0.0;
    std::array<double, 3> p{};  // p1, p2, p3
};

struct PerformanceReport {
    std::string scenario;
    double tp_mean = 0.0;
    std::array<PresetCell, 3> cells{};  // indexed like quality_presets
    int run_count = 0;
};

/// Mean tp and qp over runs; p-values are computed from those means.
PerformanceReport aggregate(std::span<const RunRecord> records, const AdaptationSpace& space);

/// Half-up rounding to `places` decimals, used for display only.
double round_half_up(double value, int places);

/// Rows tp, qp, p1, p2, p3 x columns 5r5q, 9r1q, 1r9q, six decimals.
void write_report_csv(const PerformanceReport& report, std::ostream& out);
PerformanceReport read_report_csv(std::istream& in);

/// Two-decimal aligned table in the same row/column layout.
void write_report_text(const PerformanceReport& report, std::ostream& out);

}  // namespace adaptloop
