#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptloop/kb.hpp"
#include "adaptloop/mapek.hpp"
#include "adaptloop/metrics.hpp"
#include "adaptloop/netsim.hpp"

namespace adaptloop {

/// Everything needed to replay one experiment round. See README.md for the
/// JSON schema.
struct ScenarioConfig {
    static constexpr int schema_version = 1;

    std::string scenario = "adaptive";
    int runs = 100;
    double run_duration_s = 30.0;
    double monitor_interval_s = 1.0;
    double reconfig_delay_s = 2.7;
    std::uint64_t seed = 1;

    TraceParams trace;  // duration_s is derived from runs * run_duration_s
    double probe_noise_sd = 0.0;
    std::optional<std::filesystem::path> trace_csv;  // replaces the generated trace

    double warmup_start_s = 0.0;
    double warmup_end_s = 10800.0;
    std::optional<double> threshold_mbps;  // overrides the warmup mean
    double hysteresis_mbps = 0.0;

    std::vector<FaultWindow> faults;
    std::vector<UserOverride> user_configs;
    std::vector<StreamConfig> space = AdaptationSpace::defaults().configs();
    std::string initial = "HR";
    PlanPolicy policy;

    SimTime experiment_duration() const { return seconds(run_duration_s) * runs; }
};

struct ConfigCheck {
    std::optional<ScenarioConfig> config;
    std::vector<std::string> diagnostics;  // every violation found, empty when valid

    bool ok() const { return config.has_value(); }
};

/// Parses and checks a scenario document. Relative trace paths resolve
/// against `base_dir`.
ConfigCheck check_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Throws Errc::io for an unreadable file and Errc::invalid_config for
/// malformed JSON; field-level problems come back as diagnostics.
ConfigCheck validate_config(const std::filesystem::path& path);

/// Derived inputs of a run: the experiment trace and the analysis threshold.
struct PreparedScenario {
    LoopConfig loop;
    double threshold = 0.0;
};

PreparedScenario prepare(const ScenarioConfig& config);

struct SelectionStats {
    double dominant_run_fraction = 0.0;  // runs where the config streamed strictly longest
    double time_fraction = 0.0;          // share of streamed seconds
};

SelectionStats selection_stats(std::span<const RunRecord> records, const std::string& config);

/// `run,scenario,duration_s,reconfig_s,switches,seconds_<name>...` in space order.
void write_runs_csv(std::span<const RunRecord> records, const AdaptationSpace& space, std::ostream& out);
std::vector<RunRecord> read_runs_csv(std::istream& in);

struct ExperimentResult {
    PerformanceReport report;
    LoopResult loop;
    double threshold = 0.0;
};

/// Runs all runs and writes runs.csv, events.jsonl, report.csv, report.txt,
/// kb.json and trace.csv into out_dir.
ExperimentResult run_experiment(const ScenarioConfig& config, const std::filesystem::path& out_dir);

/// Same, in memory only.
ExperimentResult simulate(const ScenarioConfig& config);

struct Comparison {
    std::vector<PerformanceReport> reports;
    /// winners[preset][pN]: every scenario attaining the maximum.
    std::array<std::array<std::vector<std::string>, 3>, 3> winners;
    std::optional<std::string> adaptive_scenario;
    std::optional<SelectionStats> adaptive_selection;  // of the "below" config, LR by default
};

/// Side-by-side comparison of three reports. `selection` is attached to
/// the report labelled "adaptive" when given.
Comparison compare(std::span<const PerformanceReport> reports,
                   std::optional<SelectionStats> selection = std::nullopt);

void write_comparison_text(const Comparison& cmp, std::ostream& out);

}  // namespace adaptloop
