// adaptloop: run, validate and compare adaptive-streaming experiments.
//
//   adaptloop run <config.json> --out <dir> [--seed N]
//   adaptloop compare <r1> <r2> <r3> [--low LR]
//   adaptloop validate <config.json>
//
// Exit codes: 0 success, 1 configuration error, 2 runtime or I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "adaptloop/error.hpp"
#include "adaptloop/experiment.hpp"

namespace fs = std::filesystem;
using namespace adaptloop;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_runtime = 2;

int report_diagnostics(const fs::path& path, const ConfigCheck& check) {
    std::cerr << path.string() << ": " << check.diagnostics.size() << " problem(s)\n";
    for (const auto& d : check.diagnostics) std::cerr << "  " << d << '\n';
    return exit_config;
}

int cmd_validate(const fs::path& path) {
    const ConfigCheck check = validate_config(path);
    if (!check.ok()) return report_diagnostics(path, check);
    std::cout << path.string() << ": ok (" << check.config->scenario << ", " << check.config->runs << " runs)\n";
    return exit_ok;
}

int cmd_run(const fs::path& path, const fs::path& out_dir, std::optional<std::uint64_t> seed) {
    ConfigCheck check = validate_config(path);
    if (!check.ok()) return report_diagnostics(path, check);
    ScenarioConfig cfg = *check.config;
    if (seed) cfg.seed = *seed;

    const ExperimentResult res = run_experiment(cfg, out_dir);
    write_report_text(res.report, std::cout);
    std::cout << fmt::format("threshold {:.6f} Mbps; outputs in {}\n", res.threshold, out_dir.string());
    return exit_ok;
}

int cmd_compare(const std::vector<fs::path>& inputs, const std::string& low) {
    std::vector<PerformanceReport> reports;
    std::optional<SelectionStats> selection;
    for (const auto& input : inputs) {
        const fs::path report_path = fs::is_directory(input) ? input / "report.csv" : input;
        std::ifstream in(report_path, std::ios::binary);
        if (!in) throw Error(Errc::io, "cannot read " + report_path.string());
        reports.push_back(read_report_csv(in));

        const fs::path runs_path = report_path.parent_path() / "runs.csv";
        if (reports.back().scenario == "adaptive" && fs::exists(runs_path)) {
            std::ifstream runs(runs_path, std::ios::binary);
            const auto records = read_runs_csv(runs);
            selection = selection_stats(records, low);
        }
    }
    write_comparison_text(compare(reports, selection), std::cout);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-adaptive video streaming experiments"};
    app.require_subcommand(1);

    fs::path config_path, out_dir;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run a scenario and write runs.csv, events.jsonl and reports");
    run->add_option("config", config_path, "Scenario JSON")->required();
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--seed", seed, "Override the scenario seed");

    std::vector<fs::path> reports;
    std::string low = "LR";
    auto* cmp = app.add_subcommand("compare", "Compare three report.csv files (or output directories)");
    cmp->add_option("reports", reports, "report.csv files or run directories")->required()->expected(3);
    cmp->add_option("--low", low, "Config counted as the low-rate selection")->capture_default_str();

    fs::path validate_path;
    auto* val = app.add_subcommand("validate", "Check a scenario file and list every problem");
    val->add_option("config", validate_path, "Scenario JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*run) return cmd_run(config_path, out_dir, seed);
        if (*cmp) return cmd_compare(reports, low);
        if (*val) return cmd_validate(validate_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == Errc::invalid_config ? exit_config : exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_runtime;
}
