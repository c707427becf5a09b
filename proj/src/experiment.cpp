#include "adaptloop/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "adaptloop/error.hpp"

namespace adaptloop {

using nlohmann::json;

namespace {

constexpr std::uint64_t trace_stream = 0;
constexpr std::uint64_t warmup_stream = 1;
constexpr std::uint64_t probe_stream = 2;

/// Pulls typed fields out of a JSON object, recording every problem instead
/// of stopping at the first one.
class FieldReader {
public:
    FieldReader(const json& obj, std::string path, std::vector<std::string>& diag)
        : obj_(obj), path_(std::move(path)), diag_(diag) {
        if (!obj_.is_object()) diag_.push_back(path_ + ": expected an object");
    }

    template <class T>
    void get(const char* key, T& dst) {
        seen_.insert(key);
        if (!obj_.is_object() || !obj_.contains(key)) return;
        try {
            dst = obj_.at(key).get<T>();
        } catch (const json::exception&) {
            diag_.push_back(fmt::format("{}{}: wrong type ({})", path_, key, obj_.at(key).dump()));
        }
    }

    template <class T>
    void get(const char* key, std::optional<T>& dst) {
        T value{};
        const bool had = obj_.is_object() && obj_.contains(key);
        get(key, value);
        if (had) dst = value;
    }

    void require(const char* key) {
        if (obj_.is_object() && !obj_.contains(key)) diag_.push_back(path_ + key + ": required");
    }

    bool has(const char* key) const { return obj_.is_object() && obj_.contains(key); }

    /// Flags keys nobody asked for (usually typos).
    void finish() {
        if (!obj_.is_object()) return;
        for (const auto& [key, _] : obj_.items())
            if (!seen_.contains(key)) diag_.push_back(path_ + key + ": unknown field");
    }

private:
    const json& obj_;
    std::string path_;
    std::vector<std::string>& diag_;
    std::set<std::string> seen_;
};

bool parse_scale(const std::string& text, int& w, int& h) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) return false;
    try {
        std::size_t used = 0;
        w = std::stoi(text.substr(0, colon), &used);
        if (used != colon) return false;
        h = std::stoi(text.substr(colon + 1), &used);
        return used == text.size() - colon - 1;
    } catch (const std::logic_error&) {
        return false;
    }
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content)) throw Error(Errc::io, "cannot write " + path.string());
}

}  // namespace

ConfigCheck check_scenario(const json& doc, const std::filesystem::path& base_dir) {
    ConfigCheck result;
    auto& diag = result.diagnostics;
    ScenarioConfig c;

    FieldReader top(doc, "", diag);
    int schema = 0;
    top.require("schema_version");
    top.get("schema_version", schema);
    if (top.has("schema_version") && schema != ScenarioConfig::schema_version)
        diag.push_back(fmt::format("schema_version: expected {}, got {}", ScenarioConfig::schema_version, schema));
    top.require("scenario");
    top.get("scenario", c.scenario);
    top.get("runs", c.runs);
    top.get("run_duration_s", c.run_duration_s);
    top.get("monitor_interval_s", c.monitor_interval_s);
    top.get("reconfig_delay_s", c.reconfig_delay_s);
    top.get("seed", c.seed);

    const json empty = json::object();

    auto object_at = [&](const char* key) -> const json& {
        return doc.is_object() && doc.contains(key) ? doc.at(key) : empty;
    };

    // Sections are read by their own FieldReader; this only marks them known.
    json ignored;
    for (const char* key : {"trace", "warmup", "analysis", "policy", "faults", "user_configs", "adaptation_space"})
        top.get(key, ignored);
    top.finish();

    {
        FieldReader r(object_at("trace"), "trace.", diag);
        r.get("mean_mbps", c.trace.mean_mbps);
        r.get("amplitude_mbps", c.trace.amplitude_mbps);
        r.get("period_s", c.trace.period_s);
        r.get("noise_sd_mbps", c.trace.noise_sd_mbps);
        r.get("probe_noise_sd_mbps", c.probe_noise_sd);
        r.get("step_s", c.trace.step_s);
        std::optional<std::string> csv;
        r.get("csv", csv);
        if (csv) {
            std::filesystem::path p(*csv);
            c.trace_csv = p.is_absolute() ? p : base_dir / p;
            if (!std::filesystem::exists(*c.trace_csv))
                diag.push_back("trace.csv: file '" + c.trace_csv->string() + "' does not exist");
        }
        r.finish();
    }
    {
        FieldReader r(object_at("warmup"), "warmup.", diag);
        r.get("start_s", c.warmup_start_s);
        r.get("end_s", c.warmup_end_s);
        r.finish();
    }
    {
        FieldReader r(object_at("analysis"), "analysis.", diag);
        r.get("threshold_mbps", c.threshold_mbps);
        r.get("hysteresis_mbps", c.hysteresis_mbps);
        r.finish();
    }

    if (doc.is_object() && doc.contains("adaptation_space")) {
        const json& arr = doc.at("adaptation_space");
        if (!arr.is_array()) {
            diag.push_back("adaptation_space: expected an array");
        } else {
            c.space.clear();
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string path = fmt::format("adaptation_space[{}].", i);
                FieldReader r(arr[i], path, diag);
                StreamConfig sc;
                std::string scale;
                r.require("name");
                r.require("frame_rate");
                r.require("scale");
                r.require("quality_score");
                r.get("name", sc.name);
                r.get("frame_rate", sc.frame_rate);
                r.get("scale", scale);
                r.get("quality_score", sc.quality_score);
                r.finish();
                if (!scale.empty() && !parse_scale(scale, sc.scale_w, sc.scale_h))
                    diag.push_back(path + "scale: expected 'W:H', got '" + scale + "'");
                try {
                    validate(sc);
                } catch (const Error& e) {
                    diag.push_back(path.substr(0, path.size() - 1) + ": " + e.what());
                }
                c.space.push_back(std::move(sc));
            }
        }
    }
    std::set<std::string> names;
    for (const auto& sc : c.space)
        if (!sc.name.empty() && !names.insert(sc.name).second)
            diag.push_back("adaptation_space: duplicate config name '" + sc.name + "'");
    if (c.space.empty()) diag.push_back("adaptation_space: must not be empty");

    std::optional<std::string> initial, above, below;
    {
        FieldReader r(object_at("policy"), "policy.", diag);
        r.get("initial", initial);
        r.get("above", above);
        r.get("below", below);
        r.finish();
    }

    const bool adaptive = c.scenario == "adaptive";
    const bool is_static = c.scenario.starts_with("static-");
    if (!adaptive && !is_static)
        diag.push_back("scenario: expected 'adaptive' or 'static-<config>', got '" + c.scenario + "'");
    if (is_static) {
        const std::string pinned = c.scenario.substr(7);
        c.initial = initial.value_or(pinned);
        c.policy = {above.value_or(pinned), below.value_or(pinned)};
        if (c.initial != pinned || c.policy.above != pinned || c.policy.below != pinned)
            diag.push_back("policy: a static scenario must stay on '" + pinned + "'");
        if (!names.contains(pinned))
            diag.push_back("scenario: '" + pinned + "' is not in the adaptation space");
    } else {
        c.policy = {above.value_or("HR"), below.value_or("LR")};
        c.initial = initial.value_or(c.policy.above);
    }
    auto resolve = [&](const std::string& name, const std::string& where) {
        if (!names.contains(name))
            diag.push_back(fmt::format("{}: '{}' is not in the adaptation space", where, name));
    };
    if (!is_static) {
        resolve(c.initial, "policy.initial");
        resolve(c.policy.above, "policy.above");
        resolve(c.policy.below, "policy.below");
    }

    if (doc.is_object() && doc.contains("faults")) {
        const json& arr = doc.at("faults");
        if (!arr.is_array()) diag.push_back("faults: expected an array");
        for (std::size_t i = 0; arr.is_array() && i < arr.size(); ++i) {
            const std::string path = fmt::format("faults[{}].", i);
            FieldReader r(arr[i], path, diag);
            double start = 0.0, end = 0.0;
            std::string kind;
            r.require("start_s");
            r.require("end_s");
            r.require("kind");
            r.get("start_s", start);
            r.get("end_s", end);
            r.get("kind", kind);
            r.finish();
            try {
                c.faults.push_back({seconds(start), seconds(end), parse_fault_kind(kind)});
            } catch (const Error&) {
                diag.push_back(path + "kind: unknown fault kind '" + kind + "'");
            }
            if (!(start < end)) diag.push_back(path.substr(0, path.size() - 1) + ": start_s must be < end_s");
        }
        try {
            FaultSchedule check(c.faults);
        } catch (const Error& e) {
            if (e.code() == Errc::invalid_argument && std::string(e.what()).find("overlap") != std::string::npos)
                diag.push_back(std::string("faults: ") + e.what());
        }
    }

    if (doc.is_object() && doc.contains("user_configs")) {
        const json& arr = doc.at("user_configs");
        if (!arr.is_array()) diag.push_back("user_configs: expected an array");
        for (std::size_t i = 0; arr.is_array() && i < arr.size(); ++i) {
            const std::string path = fmt::format("user_configs[{}].", i);
            FieldReader r(arr[i], path, diag);
            double at = 0.0;
            UserOverride ov{{}, c.policy};
            r.require("at_s");
            r.get("at_s", at);
            r.get("above", ov.policy.above);
            r.get("below", ov.policy.below);
            r.finish();
            ov.at = seconds(at);
            resolve(ov.policy.above, path + "above");
            resolve(ov.policy.below, path + "below");
            if (at < 0.0) diag.push_back(path + "at_s: must be ≥ 0");
            if (!c.user_configs.empty() && ov.at < c.user_configs.back().at)
                diag.push_back(path + "at_s: user configs must be in time order");
            c.user_configs.push_back(std::move(ov));
        }
    }

    if (c.runs < 1) diag.push_back("runs must be ≥ 1");
    if (!(c.run_duration_s > 0.0)) diag.push_back("run_duration_s must be > 0");
    if (!(c.monitor_interval_s > 0.0)) diag.push_back("monitor_interval_s must be > 0");
    if (!(c.reconfig_delay_s >= 0.0)) diag.push_back("reconfig_delay_s must be ≥ 0");
    if (!(c.trace.mean_mbps > 0.0)) diag.push_back("trace.mean_mbps must be > 0");
    if (!(c.trace.amplitude_mbps >= 0.0)) diag.push_back("trace.amplitude_mbps must be ≥ 0");
    if (!(c.trace.period_s > 0.0)) diag.push_back("trace.period_s must be > 0");
    if (!(c.trace.noise_sd_mbps >= 0.0)) diag.push_back("trace.noise_sd_mbps must be ≥ 0");
    if (!(c.probe_noise_sd >= 0.0)) diag.push_back("trace.probe_noise_sd_mbps must be ≥ 0");
    if (!(c.trace.step_s > 0.0)) diag.push_back("trace.step_s must be > 0");
    if (!(c.warmup_start_s >= 0.0 && c.warmup_start_s < c.warmup_end_s))
        diag.push_back("warmup: need 0 ≤ start_s < end_s");
    if (c.threshold_mbps && !(*c.threshold_mbps > 0.0)) diag.push_back("analysis.threshold_mbps must be > 0");
    if (!(c.hysteresis_mbps >= 0.0)) diag.push_back("analysis.hysteresis_mbps must be ≥ 0");
    if (c.runs >= 1 && c.run_duration_s > 0.0)
        for (std::size_t i = 0; i < c.faults.size(); ++i)
            if (c.faults[i].end > c.experiment_duration())
                diag.push_back(fmt::format("faults[{}]: window ends after the experiment", i));

    c.trace.duration_s = c.runs * c.run_duration_s;
    if (diag.empty()) result.config = std::move(c);
    return result;
}

ConfigCheck validate_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot read " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::invalid_config, path.string() + ": " + e.what());
    }
    return check_scenario(doc, path.parent_path());
}

PreparedScenario prepare(const ScenarioConfig& c) {
    PreparedScenario out;
    LoopConfig& loop = out.loop;
    loop.scenario = c.scenario;
    loop.runs = c.runs;
    loop.run_duration = seconds(c.run_duration_s);
    loop.monitor_interval = seconds(c.monitor_interval_s);
    loop.reconfig_delay = seconds(c.reconfig_delay_s);
    loop.space = AdaptationSpace(c.space);
    loop.policy = c.policy;
    loop.initial = c.initial;
    loop.hysteresis = c.hysteresis_mbps;
    loop.user_overrides = c.user_configs;
    loop.env.faults = FaultSchedule(c.faults);
    loop.env.probe_noise_sd = c.probe_noise_sd;
    loop.env.seed = derive_seed(c.seed, probe_stream);

    TraceParams params = c.trace;
    params.duration_s = c.runs * c.run_duration_s;
    if (c.trace_csv) {
        std::ifstream in(*c.trace_csv, std::ios::binary);
        if (!in) throw Error(Errc::io, "cannot read " + c.trace_csv->string());
        loop.env.trace = read_trace_csv(in);
    } else {
        loop.env.trace = generate_trace(params, derive_seed(c.seed, trace_stream));
    }

    if (c.threshold_mbps) {
        out.threshold = *c.threshold_mbps;
    } else if (c.trace_csv) {
        out.threshold = compute_threshold(loop.env.trace, seconds(c.warmup_start_s), seconds(c.warmup_end_s));
    } else {
        // The warmup period precedes the experiment: same model, its own seed stream.
        TraceParams warm = params;
        warm.duration_s = c.warmup_end_s;
        const auto warmup = generate_trace(warm, derive_seed(c.seed, warmup_stream));
        out.threshold = compute_threshold(warmup, seconds(c.warmup_start_s), seconds(c.warmup_end_s));
    }
    loop.threshold = out.threshold;
    return out;
}

SelectionStats selection_stats(std::span<const RunRecord> records, const std::string& config) {
    if (records.empty()) throw Error(Errc::empty_input, "no runs");
    int dominant = 0;
    SimTime mine, total;
    for (const auto& r : records) {
        const auto it = r.streamed.find(config);
        const SimTime own = it == r.streamed.end() ? SimTime{} : it->second;
        const bool wins = own > SimTime{} && std::ranges::all_of(r.streamed, [&](const auto& kv) {
                              return kv.first == config || kv.second < own;
                          });
        if (wins) ++dominant;
        mine += own;
        total += r.streamed_total();
    }
    return {static_cast<double>(dominant) / static_cast<double>(records.size()),
            total > SimTime{} ? mine.seconds() / total.seconds() : 0.0};
}

void write_runs_csv(std::span<const RunRecord> records, const AdaptationSpace& space, std::ostream& out) {
    out << "run,scenario,duration_s,reconfig_s,switches";
    for (const auto& c : space.configs()) out << ",seconds_" << c.name;
    out << '\n';
    for (const auto& r : records) {
        out << fmt::format("{},{},{:.6f},{:.6f},{}", r.run_index, r.scenario, r.duration.seconds(),
                           r.reconfig_total.seconds(), r.config_switches);
        for (const auto& c : space.configs()) {
            const auto it = r.streamed.find(c.name);
            out << fmt::format(",{:.6f}", it == r.streamed.end() ? 0.0 : it->second.seconds());
        }
        out << '\n';
    }
}

std::vector<RunRecord> read_runs_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::invalid_argument, "empty runs csv");
    const auto header = split(line, ',');
    if (header.size() < 5 || header[0] != "run" || header[1] != "scenario")
        throw Error(Errc::invalid_argument, "unexpected runs csv header '" + line + "'");
    std::vector<RunRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) throw Error(Errc::invalid_argument, "bad runs row '" + line + "'");
        RunRecord r;
        try {
            r.run_index = std::stoi(cells[0]);
            r.scenario = cells[1];
            r.duration = seconds(std::stod(cells[2]));
            r.reconfig_total = seconds(std::stod(cells[3]));
            r.config_switches = std::stoi(cells[4]);
            for (std::size_t i = 5; i < cells.size(); ++i) {
                const SimTime s = seconds(std::stod(cells[i]));
                if (s > SimTime{}) r.streamed[header[i].substr(std::string("seconds_").size())] = s;
            }
        } catch (const std::logic_error&) {
            throw Error(Errc::invalid_argument, "bad number in '" + line + "'");
        }
        out.push_back(std::move(r));
    }
    return out;
}

ExperimentResult simulate(const ScenarioConfig& config) {
    PreparedScenario prep = prepare(config);
    ExperimentResult res;
    res.threshold = prep.threshold;
    const AdaptationSpace space = prep.loop.space;
    res.loop = run_loop(prep.loop);
    res.report = aggregate(res.loop.records, space);
    return res;
}

ExperimentResult run_experiment(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(Errc::io, "cannot create " + out_dir.string() + ": " + ec.message());

    ExperimentResult res = simulate(config);
    const AdaptationSpace space(config.space);

    std::ostringstream runs, events, report_csv, report_txt, trace;
    write_runs_csv(res.loop.records, space, runs);
    write_events_jsonl(res.loop.events, events);
    write_report_csv(res.report, report_csv);
    write_report_text(res.report, report_txt);
    report_txt << fmt::format("threshold {:.6f} Mbps\n", res.threshold);
    if (config.scenario == "adaptive") {
        const auto sel = selection_stats(res.loop.records, config.policy.below);
        report_txt << fmt::format("{} dominant in {:.2f}% of runs, {:.2f}% of streamed seconds\n",
                                  config.policy.below, 100.0 * sel.dominant_run_fraction,
                                  100.0 * sel.time_fraction);
    }
    write_trace_csv(prepare(config).loop.env.trace, trace);

    write_file(out_dir / "runs.csv", runs.str());
    write_file(out_dir / "events.jsonl", events.str());
    write_file(out_dir / "report.csv", report_csv.str());
    write_file(out_dir / "report.txt", report_txt.str());
    write_file(out_dir / "trace.csv", trace.str());
    persist(res.loop.kb, out_dir / "kb.json");
    return res;
}

Comparison compare(std::span<const PerformanceReport> reports, std::optional<SelectionStats> selection) {
    if (reports.size() != 3) throw Error(Errc::invalid_argument, "compare needs exactly three reports");
    Comparison cmp;
    cmp.reports.assign(reports.begin(), reports.end());
    for (std::size_t q = 0; q < quality_presets.size(); ++q) {
        for (std::size_t k = 0; k < performance_presets.size(); ++k) {
            double best = -1.0;
            for (const auto& r : reports) best = std::max(best, r.cells[q].p[k]);
            for (const auto& r : reports)
                if (std::abs(r.cells[q].p[k] - best) <= 1e-9) cmp.winners[q][k].push_back(r.scenario);
        }
    }
    for (const auto& r : reports)
        if (r.scenario == "adaptive") cmp.adaptive_scenario = r.scenario;
    if (cmp.adaptive_scenario) cmp.adaptive_selection = selection;
    return cmp;
}

void write_comparison_text(const Comparison& cmp, std::ostream& out) {
    out << fmt::format("{:<10}", "metric");
    for (const auto& r : cmp.reports) out << fmt::format("|{:^24}", r.scenario);
    out << '\n' << fmt::format("{:<10}", "");
    for (std::size_t i = 0; i < cmp.reports.size(); ++i) {
        out << '|';
        for (const auto& q : quality_presets) out << fmt::format("{:>8}", q.label);
    }
    out << '\n';
    auto row = [&](std::string_view label, auto value_of) {
        out << fmt::format("{:<10}", label);
        for (const auto& r : cmp.reports) {
            out << '|';
            for (std::size_t q = 0; q < quality_presets.size(); ++q)
                out << fmt::format("{:>8.2f}", round_half_up(value_of(r, q), 2));
        }
        out << '\n';
    };
    row("tp", [](const PerformanceReport& r, std::size_t) { return r.tp_mean; });
    row("qp", [](const PerformanceReport& r, std::size_t q) { return r.cells[q].qp; });
    for (std::size_t k = 0; k < performance_presets.size(); ++k)
        row(std::string(performance_presets[k].label) + "(sys)",
            [k](const PerformanceReport& r, std::size_t q) { return r.cells[q].p[k]; });

    out << "\nbest scenario per setting\n";
    for (std::size_t q = 0; q < quality_presets.size(); ++q) {
        for (std::size_t k = 0; k < performance_presets.size(); ++k) {
            const auto& w = cmp.winners[q][k];
            std::string names;
            for (const auto& n : w) names += (names.empty() ? "" : ", ") + n;
            out << fmt::format("  {} {}: {}{}\n", quality_presets[q].label, performance_presets[k].label,
                               w.size() > 1 ? "tie " : "", names);
        }
    }
    if (cmp.adaptive_selection) {
        out << fmt::format("\nadaptive low-rate selection: {:.2f}% of runs, {:.2f}% of streamed seconds\n",
                           100.0 * cmp.adaptive_selection->dominant_run_fraction,
                           100.0 * cmp.adaptive_selection->time_fraction);
    }
}

}  // namespace adaptloop
