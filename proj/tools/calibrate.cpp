// Grid search for adaptive trace parameters.
//
// For each candidate (period, amplitude, hysteresis) the adaptive scenario is
// run over a sweep of seeds; candidates are ranked by how closely the mean
// time performance and low-rate dominant-run share hit the targets, and by
// how many seeds land inside the acceptance brackets.
//
//   calibrate <base-config.json> [--seeds N] [--tp 0.91] [--share 0.31]

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "adaptloop/experiment.hpp"

using namespace adaptloop;

int main(int argc, char** argv) {
    CLI::App app{"Calibrate the adaptive scenario"};
    std::string base_path;
    int seeds = 20;
    double tp_target = 0.91, share_target = 0.31;
    std::vector<double> periods{55, 58, 60, 61, 62, 64, 66};
    std::vector<double> ratios{0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95};
    app.add_option("config", base_path)->required();
    app.add_option("--seeds", seeds);
    app.add_option("--tp", tp_target);
    app.add_option("--share", share_target);
    app.add_option("--periods", periods);
    app.add_option("--ratios", ratios, "hysteresis as a fraction of amplitude");
    CLI11_PARSE(app, argc, argv);

    const ConfigCheck check = validate_config(base_path);
    if (!check.ok()) {
        for (const auto& d : check.diagnostics) std::cerr << d << '\n';
        return 1;
    }

    struct Row {
        double period, ratio, tp, share, score;
        int inside;
    };
    std::vector<Row> rows;
    for (double period : periods) {
        for (double ratio : ratios) {
            ScenarioConfig cfg = *check.config;
            cfg.trace.period_s = period;
            cfg.hysteresis_mbps = ratio * cfg.trace.amplitude_mbps;
            double tp = 0.0, share = 0.0;
            int inside = 0;
            for (int s = 1; s <= seeds; ++s) {
                cfg.seed = static_cast<std::uint64_t>(s);
                const auto res = simulate(cfg);
                const double run_tp = res.report.tp_mean;
                const double run_share = selection_stats(res.loop.records, cfg.policy.below).dominant_run_fraction;
                tp += run_tp;
                share += run_share;
                if (run_tp >= 0.88 && run_tp <= 0.94 && run_share >= 0.26 && run_share <= 0.36) ++inside;
            }
            tp /= seeds;
            share /= seeds;
            rows.push_back({period, ratio, tp, share, std::hypot((tp - tp_target) / 0.03, (share - share_target) / 0.05), inside});
        }
    }
    std::ranges::sort(rows, {}, [](const Row& r) { return std::pair(-r.inside, r.score); });
    std::cout << "period  band/amp   tp_mean  lr_share  seeds_inside\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(rows.size(), 15); ++i) {
        const auto& r = rows[i];
        std::cout << fmt::format("{:6.1f}  {:8.2f}  {:8.4f}  {:8.4f}  {:>4}/{}\n", r.period, r.ratio, r.tp, r.share,
                                 r.inside, seeds);
    }
    return 0;
}
