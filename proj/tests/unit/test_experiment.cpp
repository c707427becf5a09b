#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "adaptloop/error.hpp"
#include "adaptloop/experiment.hpp"

using namespace adaptloop;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path config_dir = ADAPTLOOP_CONFIG_DIR;

json load_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("adaptloop_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

bool has_diag(const ConfigCheck& c, const std::string& needle) {
    for (const auto& d : c.diagnostics)
        if (d.find(needle) != std::string::npos) return true;
    return false;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(ADAPTLOOP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

PerformanceReport table_report(std::string scenario, double tp, std::array<double, 3> qp) {
    PerformanceReport r;
    r.scenario = std::move(scenario);
    r.tp_mean = tp;
    r.run_count = 100;
    for (int i = 0; i < 3; ++i) {
        r.cells[i].qp = qp[i];
        for (int k = 0; k < 3; ++k)
            r.cells[i].p[k] = system_performance(tp, qp[i], performance_presets[k].weights);
    }
    return r;
}

}  // namespace

TEST(ScenarioConfig, BundledConfigsValidate) {
    for (const char* name : {"table3-static-lr.json", "table3-static-hr.json", "table3-adaptive.json"}) {
        const auto check = validate_config(config_dir / name);
        EXPECT_TRUE(check.ok()) << name << ": " << (check.diagnostics.empty() ? "" : check.diagnostics.front());
    }
    const auto adaptive = validate_config(config_dir / "table3-adaptive.json").config;
    ASSERT_TRUE(adaptive);
    EXPECT_EQ(adaptive->runs, 100);
    EXPECT_EQ(adaptive->seed, 2020u);
    EXPECT_DOUBLE_EQ(adaptive->reconfig_delay_s, 2.7);
    EXPECT_EQ(adaptive->policy, (PlanPolicy{"HR", "LR"}));
}

TEST(ScenarioConfig, ZeroRunsIsRejected) {
    auto doc = load_json(config_dir / "table3-adaptive.json");
    doc["runs"] = 0;
    const auto check = check_scenario(doc);
    EXPECT_FALSE(check.ok());
    EXPECT_TRUE(has_diag(check, "runs must be ≥ 1"));
}

TEST(ScenarioConfig, DanglingPolicyName) {
    auto doc = load_json(config_dir / "table3-adaptive.json");
    doc["policy"]["below"] = "XX";
    const auto check = check_scenario(doc);
    EXPECT_TRUE(has_diag(check, "policy.below: 'XX' is not in the adaptation space"));
}

TEST(ScenarioConfig, CollectsEveryProblem) {
    auto doc = load_json(config_dir / "table3-adaptive.json");
    doc["runs"] = -1;
    doc["trace"]["period_s"] = "long";
    doc["colour"] = "blue";
    doc["faults"] = json::array({{{"start_s", 50}, {"end_s", 10}, {"kind", "registry-unavailable"}}});
    doc.erase("scenario");
    const auto check = check_scenario(doc);
    EXPECT_FALSE(check.ok());
    EXPECT_GE(check.diagnostics.size(), 5u);
    EXPECT_TRUE(has_diag(check, "runs must be ≥ 1"));
    EXPECT_TRUE(has_diag(check, "trace.period_s: wrong type"));
    EXPECT_TRUE(has_diag(check, "colour: unknown field"));
    EXPECT_TRUE(has_diag(check, "faults[0]: start_s must be < end_s"));
    EXPECT_TRUE(has_diag(check, "scenario: required"));
}

TEST(ScenarioConfig, StaticScenarioMustNameAConfig) {
    auto doc = load_json(config_dir / "table3-static-hr.json");
    doc["scenario"] = "static-UHD";
    EXPECT_TRUE(has_diag(check_scenario(doc), "'UHD' is not in the adaptation space"));
    doc["scenario"] = "sometimes";
    EXPECT_FALSE(check_scenario(doc).ok());
}

TEST(ScenarioConfig, FileErrors) {
    const auto dir = scratch("file_errors");
    std::ofstream(dir / "bad.json") << "{ \"runs\": ";
    try {
        validate_config(dir / "bad.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::invalid_config);
    }
    try {
        validate_config(dir / "missing.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::io);
    }
}

TEST(Prepare, ThresholdFromWarmupOrOverride) {
    auto cfg = *validate_config(config_dir / "table3-adaptive.json").config;
    cfg.runs = 2;
    const auto p = prepare(cfg);
    EXPECT_NEAR(p.threshold, 6.0, 0.1);  // mean of a long sinusoid around 6 Mbps
    EXPECT_DOUBLE_EQ(p.loop.threshold, p.threshold);
    EXPECT_DOUBLE_EQ(p.loop.hysteresis, 2.85);
    EXPECT_EQ(p.loop.env.trace.duration(), seconds(60));
    cfg.threshold_mbps = 4.25;
    EXPECT_DOUBLE_EQ(prepare(cfg).threshold, 4.25);
}

TEST(Simulate, SingleStaticRun) {
    auto cfg = *validate_config(config_dir / "table3-static-hr.json").config;
    cfg.runs = 1;
    const auto res = simulate(cfg);
    ASSERT_EQ(res.loop.records.size(), 1u);
    EXPECT_EQ(res.report.tp_mean, 1.0);
    EXPECT_NEAR(res.report.cells[1].qp, 0.92, 1e-9);
}

TEST(SelectionStats, StrictDominance) {
    std::vector<RunRecord> runs(4);
    runs[0].streamed = {{"LR", seconds(20)}, {"HR", seconds(10)}};
    runs[1].streamed = {{"LR", seconds(15)}, {"HR", seconds(15)}};
    runs[2].streamed = {{"HR", seconds(30)}};
    runs[3].streamed = {{"LR", seconds(25)}, {"HR", seconds(2.3)}};
    const auto s = selection_stats(runs, "LR");
    EXPECT_DOUBLE_EQ(s.dominant_run_fraction, 0.5);
    EXPECT_NEAR(s.time_fraction, 60.0 / 117.3, 1e-12);
}

TEST(RunsCsv, RoundTrip) {
    auto cfg = *validate_config(config_dir / "table3-adaptive.json").config;
    cfg.runs = 5;
    const auto res = simulate(cfg);
    std::stringstream ss;
    const AdaptationSpace space(cfg.space);
    write_runs_csv(res.loop.records, space, ss);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "run,scenario,duration_s,reconfig_s,switches,seconds_LR,seconds_HR");
    const auto back = read_runs_csv(ss);
    ASSERT_EQ(back.size(), 5u);
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].duration, res.loop.records[i].duration);
        EXPECT_EQ(back[i].reconfig_total, res.loop.records[i].reconfig_total);
        EXPECT_EQ(back[i].config_switches, res.loop.records[i].config_switches);
    }
}

TEST(RunExperiment, OutputsAreByteIdentical) {
    auto cfg = *validate_config(config_dir / "table3-adaptive.json").config;
    cfg.runs = 10;
    const auto a = scratch("det_a"), b = scratch("det_b");
    run_experiment(cfg, a);
    run_experiment(cfg, b);
    for (const char* f : {"runs.csv", "events.jsonl", "report.csv", "report.txt", "kb.json", "trace.csv"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
}

TEST(Compare, TableInputsPickTheExpectedWinners) {
    std::vector<PerformanceReport> reps{
        table_report("static-LR", 1.0, {0.745, 0.549, 0.941}),
        table_report("static-HR", 1.0, {0.60, 0.92, 0.28}),
        table_report("adaptive", 0.91, {0.645, 0.80, 0.49}),
    };
    const auto cmp = compare(reps, SelectionStats{0.31, 0.30});
    // tp dominates p2, so a static scenario wins in every column.
    for (int q = 0; q < 3; ++q)
        for (const auto& w : cmp.winners[q][1]) EXPECT_NE(w, "adaptive");
    EXPECT_GT(reps[2].cells[2].p[2], reps[1].cells[2].p[2]);
    EXPECT_NEAR(reps[2].cells[2].p[2], 0.532, 1e-9);
    EXPECT_NEAR(reps[1].cells[2].p[2], 0.352, 1e-9);
    EXPECT_EQ(cmp.adaptive_scenario, "adaptive");

    std::ostringstream out;
    write_comparison_text(cmp, out);
    EXPECT_NE(out.str().find("static-HR"), std::string::npos);
}

TEST(Compare, IdenticalReportsTie) {
    const auto r = table_report("x", 0.9, {0.5, 0.5, 0.5});
    std::vector<PerformanceReport> reps{r, r, r};
    reps[1].scenario = "y";
    reps[2].scenario = "z";
    const auto cmp = compare(reps);
    for (const auto& row : cmp.winners)
        for (const auto& cell : row) EXPECT_EQ(cell.size(), 3u);
    std::vector<PerformanceReport> two{r, r};
    EXPECT_THROW(compare(two), Error);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch("cli");
    auto doc = load_json(config_dir / "table3-static-hr.json");
    doc["runs"] = 3;
    std::ofstream(dir / "ok.json") << doc.dump();
    doc["runs"] = 0;
    std::ofstream(dir / "bad.json") << doc.dump();

    EXPECT_EQ(cli("validate " + (dir / "ok.json").string()), 0);
    EXPECT_EQ(cli("validate " + (dir / "bad.json").string()), 1);
    EXPECT_EQ(cli("run " + (dir / "bad.json").string() + " --out " + (dir / "o").string()), 1);
    EXPECT_EQ(cli("run " + (dir / "nope.json").string() + " --out " + (dir / "o").string()), 2);
    EXPECT_EQ(cli("run " + (dir / "ok.json").string() + " --out " + (dir / "hr").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "hr" / "report.csv"));
    const std::string r = (dir / "hr").string();
    EXPECT_EQ(cli("compare " + r + " " + r + " " + r), 0);
    EXPECT_EQ(cli("compare " + r + " " + r), 1);
    EXPECT_EQ(cli("bogus"), 1);
}
