#include "adaptloop/kb.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "adaptloop/error.hpp"

namespace adaptloop {

using nlohmann::json;

void validate(const StreamConfig& c) {
    if (c.name.empty()) throw Error(Errc::invalid_argument, "stream config needs a name");
    if (c.frame_rate <= 0) throw Error(Errc::invalid_argument, c.name + ": frame_rate must be > 0");
    if (c.scale_w <= 0 || c.scale_h <= 0)
        throw Error(Errc::invalid_argument, c.name + ": scale must be positive");
    if (!(c.quality_score >= 0.0 && c.quality_score <= 1.0))
        throw Error(Errc::invalid_argument, c.name + ": quality_score must lie in [0,1]");
}

AdaptationSpace::AdaptationSpace(std::vector<StreamConfig> configs) : configs_(std::move(configs)) {
    if (configs_.empty()) throw Error(Errc::invalid_argument, "adaptation space is empty");
    std::unordered_set<std::string> seen;
    for (const auto& c : configs_) {
        validate(c);
        if (!seen.insert(c.name).second)
            throw Error(Errc::invalid_argument, "duplicate config name '" + c.name + "'");
    }
}

AdaptationSpace AdaptationSpace::defaults() {
    return AdaptationSpace({
        {"LR", 30, 320, 240, 0.99},
        {"HR", 60, 720, 480, 0.20},
    });
}

int AdaptationSpace::max_frame_rate() const {
    return std::ranges::max(configs_, {}, &StreamConfig::frame_rate).frame_rate;
}

const StreamConfig* AdaptationSpace::find(std::string_view name) const {
    auto it = std::ranges::find(configs_, name, &StreamConfig::name);
    return it == configs_.end() ? nullptr : &*it;
}

const StreamConfig& AdaptationSpace::at(std::string_view name) const {
    if (const auto* c = find(name)) return *c;
    throw Error(Errc::unknown_config, "no config named '" + std::string(name) + "'");
}

std::string_view to_string(StrategyReason reason) {
    switch (reason) {
        case StrategyReason::below_threshold: return "below-threshold";
        case StrategyReason::above_threshold: return "above-threshold";
        case StrategyReason::user_config: return "user-config";
    }
    return "user-config";
}

StrategyReason parse_strategy_reason(std::string_view text) {
    if (text == "below-threshold") return StrategyReason::below_threshold;
    if (text == "above-threshold") return StrategyReason::above_threshold;
    if (text == "user-config") return StrategyReason::user_config;
    throw Error(Errc::invalid_argument, "unknown strategy reason '" + std::string(text) + "'");
}

SimTime RunRecord::streamed_total() const {
    SimTime total;
    for (const auto& [_, s] : streamed) total += s;
    return total;
}

KnowledgeBase register_strategy(KnowledgeBase kb, AdaptationStrategy strategy) {
    if (!kb.strategies_.empty() && strategy.id <= kb.strategies_.back().id) {
        throw Error(Errc::non_monotonic_id, "strategy id " + std::to_string(strategy.id) +
                                                " does not exceed " +
                                                std::to_string(kb.strategies_.back().id));
    }
    kb.strategies_.push_back(std::move(strategy));
    return kb;
}

std::optional<AdaptationStrategy> fetch_latest_strategy(const KnowledgeBase& kb) {
    if (kb.strategies().empty()) return std::nullopt;
    return kb.strategies().back();
}

KnowledgeBase append_run_record(KnowledgeBase kb, RunRecord record) {
    if (record.duration <= SimTime{})
        throw Error(Errc::invalid_run, "run " + std::to_string(record.run_index) + " has non-positive duration");
    kb.runs_.push_back(std::move(record));
    return kb;
}

// Times are stored as integer microseconds so the round-trip is exact.

static json strategy_to_json(const AdaptationStrategy& s) {
    return {{"id", s.id},
            {"issued_at_us", s.issued_at.micros()},
            {"target", s.target},
            {"reason", to_string(s.reason)}};
}

static json run_to_json(const RunRecord& r) {
    json streamed = json::object();
    for (const auto& [name, t] : r.streamed) streamed[name] = t.micros();
    return {{"run_index", r.run_index},
            {"scenario", r.scenario},
            {"duration_us", r.duration.micros()},
            {"reconfig_total_us", r.reconfig_total.micros()},
            {"config_switches", r.config_switches},
            {"streamed_us", streamed}};
}

void to_json(json& j, const KnowledgeBase& kb) {
    json strategies = json::array();
    for (const auto& s : kb.strategies()) strategies.push_back(strategy_to_json(s));
    json runs = json::array();
    for (const auto& r : kb.run_records()) runs.push_back(run_to_json(r));
    j = {{"schema_version", KnowledgeBase::schema_version},
         {"threshold_mbps", kb.threshold() ? json(*kb.threshold()) : json(nullptr)},
         {"last_applied", kb.last_applied() ? json(*kb.last_applied()) : json(nullptr)},
         {"strategies", std::move(strategies)},
         {"run_records", std::move(runs)}};
}

void from_json(const json& j, KnowledgeBase& kb) {
    if (!j.is_object() || !j.contains("schema_version"))
        throw Error(Errc::malformed_store, "missing schema_version");
    if (j.at("schema_version").get<int>() != KnowledgeBase::schema_version)
        throw Error(Errc::schema_mismatch, "store has schema_version " + j.at("schema_version").dump());

    KnowledgeBase out;
    try {
        if (!j.at("threshold_mbps").is_null()) out.threshold_ = j.at("threshold_mbps").get<double>();
        if (!j.at("last_applied").is_null()) out.last_applied_ = j.at("last_applied").get<std::string>();
        for (const auto& s : j.at("strategies")) {
            out = register_strategy(std::move(out),
                                    {s.at("id").get<std::uint64_t>(),
                                     SimTime::from_micros(s.at("issued_at_us").get<std::int64_t>()),
                                     s.at("target").get<std::string>(),
                                     parse_strategy_reason(s.at("reason").get<std::string>())});
        }
        for (const auto& r : j.at("run_records")) {
            RunRecord rec;
            rec.run_index = r.at("run_index").get<int>();
            rec.scenario = r.at("scenario").get<std::string>();
            rec.duration = SimTime::from_micros(r.at("duration_us").get<std::int64_t>());
            rec.reconfig_total = SimTime::from_micros(r.at("reconfig_total_us").get<std::int64_t>());
            rec.config_switches = r.at("config_switches").get<int>();
            for (const auto& [name, us] : r.at("streamed_us").items())
                rec.streamed[name] = SimTime::from_micros(us.get<std::int64_t>());
            out = append_run_record(std::move(out), std::move(rec));
        }
    } catch (const json::exception& e) {
        throw Error(Errc::malformed_store, e.what());
    } catch (const Error& e) {
        throw Error(Errc::malformed_store, e.what());
    }
    kb = std::move(out);
}

void persist(const KnowledgeBase& kb, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    out << json(kb).dump(2) << '\n';
    if (!out) throw Error(Errc::io, "write to " + path.string() + " failed");
}

KnowledgeBase load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::malformed_store, path.string() + ": " + e.what());
    }
    return doc.get<KnowledgeBase>();
}

void KnowledgeStore::register_strategy(AdaptationStrategy strategy) {
    std::lock_guard lock(mu_);
    // Check before moving so a rejected id leaves the store intact.
    if (!kb_.strategies().empty() && strategy.id <= kb_.strategies().back().id)
        throw Error(Errc::non_monotonic_id, "strategy id " + std::to_string(strategy.id) + " is not monotonic");
    kb_ = adaptloop::register_strategy(std::move(kb_), std::move(strategy));
}

std::optional<AdaptationStrategy> KnowledgeStore::fetch_latest_strategy() const {
    std::lock_guard lock(mu_);
    return adaptloop::fetch_latest_strategy(kb_);
}

KnowledgeBase KnowledgeStore::snapshot() const {
    std::lock_guard lock(mu_);
    return kb_;
}

}  // namespace adaptloop
