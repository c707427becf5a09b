#include "adaptloop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "adaptloop/error.hpp"

namespace adaptloop {

namespace {

constexpr double weight_tol = 1e-9;

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

}  // namespace

void validate(const QualityWeights& qw) {
    if (qw.w_rate < 0.0 || qw.w_frame < 0.0 || std::abs(qw.w_rate + qw.w_frame - 1.0) > weight_tol)
        throw Error(Errc::invalid_argument, "quality weights must be non-negative and sum to 1");
}

void validate(const PerformanceWeights& pw) {
    if (pw.w_t < 0.0 || pw.w_q < 0.0 || std::abs(pw.w_t + pw.w_q - 1.0) > weight_tol)
        throw Error(Errc::invalid_argument, "performance weights must be non-negative and sum to 1");
}

double time_performance(const RunRecord& r) {
    if (r.duration <= SimTime{}) throw Error(Errc::invalid_run, "duration must be > 0");
    if (r.reconfig_total < SimTime{} || r.reconfig_total > r.duration)
        throw Error(Errc::invalid_run, "reconfiguration time outside [0, duration]");
    return 1.0 - r.reconfig_total.seconds() / r.duration.seconds();
}

double config_quality_score(const StreamConfig& config, const AdaptationSpace& space,
                            const QualityWeights& qw) {
    validate(qw);
    const double rate = static_cast<double>(config.frame_rate) / space.max_frame_rate();
    return qw.w_rate * rate + qw.w_frame * config.quality_score;
}

double quality_performance(const RunRecord& r, const AdaptationSpace& space, const QualityWeights& qw) {
    const SimTime streamed = r.streamed_total();
    if (streamed <= SimTime{})
        throw Error(Errc::no_streamed_time, fmt::format("run {} streamed nothing", r.run_index));
    if (streamed + r.reconfig_total != r.duration)
        throw Error(Errc::invalid_run, fmt::format("run {} time accounting is off", r.run_index));

    double quality = 0.0;
    for (const auto& [name, t] : r.streamed)
        quality += t.seconds() * config_quality_score(space.at(name), space, qw);
    const double quality_max = streamed.seconds() * 1.0;
    return std::clamp(quality / quality_max, 0.0, 1.0);
}

double system_performance(double tp, double qp, const PerformanceWeights& pw) {
    validate(pw);
    if (!in_unit(tp) || !in_unit(qp)) throw Error(Errc::invalid_argument, "tp and qp must lie in [0,1]");
    return pw.w_t * tp + pw.w_q * qp;
}

PerformanceReport aggregate(std::span<const RunRecord> records, const AdaptationSpace& space) {
    if (records.empty()) throw Error(Errc::empty_input, "no run records to aggregate");
    PerformanceReport rep;
    rep.scenario = records.front().scenario;
    rep.run_count = static_cast<int>(records.size());

    double tp_sum = 0.0;
    std::array<double, 3> qp_sum{};
    for (const auto& r : records) {
        if (r.scenario != rep.scenario)
            throw Error(Errc::mixed_scenarios, "'" + r.scenario + "' mixed with '" + rep.scenario + "'");
        tp_sum += time_performance(r);
        for (std::size_t i = 0; i < quality_presets.size(); ++i)
            qp_sum[i] += quality_performance(r, space, quality_presets[i].weights);
    }
    const double n = static_cast<double>(records.size());
    rep.tp_mean = tp_sum / n;
    for (std::size_t i = 0; i < quality_presets.size(); ++i) {
        auto& cell = rep.cells[i];
        cell.qp = qp_sum[i] / n;
        for (std::size_t k = 0; k < performance_presets.size(); ++k)
            cell.p[k] = system_performance(rep.tp_mean, cell.qp, performance_presets[k].weights);
    }
    return rep;
}

double round_half_up(double value, int places) {
    const double scale = std::pow(10.0, places);
    // The nudge absorbs binary representation error (0.745 is 0.74499999...).
    return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

void write_report_csv(const PerformanceReport& rep, std::ostream& out) {
    out << "scenario,runs,metric";
    for (const auto& q : quality_presets) out << ',' << q.label;
    out << '\n';
    auto row = [&](std::string_view metric, auto value_of) {
        out << rep.scenario << ',' << rep.run_count << ',' << metric;
        for (std::size_t i = 0; i < rep.cells.size(); ++i) out << fmt::format(",{:.6f}", value_of(i));
        out << '\n';
    };
    row("tp", [&](std::size_t) { return rep.tp_mean; });
    row("qp", [&](std::size_t i) { return rep.cells[i].qp; });
    for (std::size_t k = 0; k < performance_presets.size(); ++k)
        row(performance_presets[k].label, [&](std::size_t i) { return rep.cells[i].p[k]; });
}

PerformanceReport read_report_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::invalid_argument, "empty report");
    const auto header = split(line, ',');
    if (header.size() != 3 + quality_presets.size() || header[0] != "scenario" || header[2] != "metric")
        throw Error(Errc::invalid_argument, "unexpected report header '" + line + "'");
    for (std::size_t i = 0; i < quality_presets.size(); ++i)
        if (header[3 + i] != quality_presets[i].label)
            throw Error(Errc::preset_mismatch, "report column '" + header[3 + i] + "' is not " +
                                                   std::string(quality_presets[i].label));

    PerformanceReport rep;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) throw Error(Errc::invalid_argument, "bad report row '" + line + "'");
        rep.scenario = cells[0];
        std::array<double, 3> v{};
        try {
            rep.run_count = std::stoi(cells[1]);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::stod(cells[3 + i]);
        } catch (const std::logic_error&) {
            throw Error(Errc::invalid_argument, "bad number in '" + line + "'");
        }
        const std::string& metric = cells[2];
        if (metric == "tp") {
            rep.tp_mean = v[0];
        } else if (metric == "qp") {
            for (std::size_t i = 0; i < v.size(); ++i) rep.cells[i].qp = v[i];
        } else {
            std::size_t k = 0;
            while (k < performance_presets.size() && performance_presets[k].label != metric) ++k;
            if (k == performance_presets.size()) throw Error(Errc::preset_mismatch, "unknown metric '" + metric + "'");
            for (std::size_t i = 0; i < v.size(); ++i) rep.cells[i].p[k] = v[i];
        }
        ++rows;
    }
    if (rows != 2 + static_cast<int>(performance_presets.size()))
        throw Error(Errc::invalid_argument, "report must have tp, qp, p1, p2 and p3 rows");
    return rep;
}

void write_report_text(const PerformanceReport& rep, std::ostream& out) {
    out << fmt::format("{} ({} runs)\n", rep.scenario, rep.run_count);
    out << fmt::format("{:<8}", "metric");
    for (const auto& q : quality_presets) out << fmt::format("{:>8}", q.label);
    out << '\n';
    auto row = [&](std::string_view metric, auto value_of) {
        out << fmt::format("{:<8}", metric);
        for (std::size_t i = 0; i < rep.cells.size(); ++i)
            out << fmt::format("{:>8.2f}", round_half_up(value_of(i), 2));
        out << '\n';
    };
    row("tp", [&](std::size_t) { return rep.tp_mean; });
    row("qp", [&](std::size_t i) { return rep.cells[i].qp; });
    for (std::size_t k = 0; k < performance_presets.size(); ++k)
        row(std::string(performance_presets[k].label) + "(sys)", [&](std::size_t i) { return rep.cells[i].p[k]; });
}

}  // namespace adaptloop
