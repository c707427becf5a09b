#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adaptloop/sim_time.hpp"

namespace adaptloop {

/// One point of the adaptation space.
///
/// `quality_score` is the normalized per-frame quality of the configuration
/// (1.0 is the best achievable). It is a model parameter, not derived from
/// the resolution.
struct StreamConfig {
    std::string name;
    int frame_rate = 0;
    int scale_w = 0;
    int scale_h = 0;
    double quality_score = 0.0;

    bool operator==(const StreamConfig&) const = default;
};

/// Throws Errc::invalid_argument when a field is out of range.
void validate(const StreamConfig& config);

/// Non-empty, name-unique ordered set of stream configurations.
class AdaptationSpace {
public:
    explicit AdaptationSpace(std::vector<StreamConfig> configs);

    /// LR = 30 fps 320x240 q=0.99, HR = 60 fps 720x480 q=0.20.
    static AdaptationSpace defaults();

    const std::vector<StreamConfig>& configs() const { return configs_; }
    int max_frame_rate() const;

    bool contains(std::string_view name) const { return find(name) != nullptr; }
    const StreamConfig* find(std::string_view name) const;
    /// Throws Errc::unknown_config.
    const StreamConfig& at(std::string_view name) const;

    bool operator==(const AdaptationSpace&) const = default;

private:
    std::vector<StreamConfig> configs_;
};

enum class StrategyReason { below_threshold, above_threshold, user_config };

std::string_view to_string(StrategyReason reason);
StrategyReason parse_strategy_reason(std::string_view text);

struct AdaptationStrategy {
    std::uint64_t id = 0;
    SimTime issued_at;
    std::string target;
    StrategyReason reason = StrategyReason::user_config;

    bool operator==(const AdaptationStrategy&) const = default;
};

/// Per-run ledger produced by the stream at every run boundary.
struct RunRecord {
    int run_index = 0;
    SimTime duration;
    SimTime reconfig_total;
    std::map<std::string, SimTime> streamed;
    int config_switches = 0;
    std::string scenario;

    SimTime streamed_total() const;
    bool operator==(const RunRecord&) const = default;
};

/// Append-only store of strategies and run records plus the shared
/// controller state (analysis threshold, last applied configuration).
class KnowledgeBase {
public:
    static constexpr int schema_version = 1;

    const std::vector<AdaptationStrategy>& strategies() const { return strategies_; }
    const std::vector<RunRecord>& run_records() const { return runs_; }

    std::optional<double> threshold() const { return threshold_; }
    void set_threshold(double mbps) { threshold_ = mbps; }

    const std::optional<std::string>& last_applied() const { return last_applied_; }
    void set_last_applied(std::string name) { last_applied_ = std::move(name); }

    bool operator==(const KnowledgeBase&) const = default;

private:
    friend KnowledgeBase register_strategy(KnowledgeBase kb, AdaptationStrategy strategy);
    friend KnowledgeBase append_run_record(KnowledgeBase kb, RunRecord record);
    friend void from_json(const nlohmann::json& j, KnowledgeBase& kb);

    std::vector<AdaptationStrategy> strategies_;
    std::vector<RunRecord> runs_;
    std::optional<double> threshold_;
    std::optional<std::string> last_applied_;
};

/// Throws Errc::non_monotonic_id unless strategy.id exceeds every stored id.
KnowledgeBase register_strategy(KnowledgeBase kb, AdaptationStrategy strategy);

std::optional<AdaptationStrategy> fetch_latest_strategy(const KnowledgeBase& kb);

/// Throws Errc::invalid_run for a non-positive duration.
KnowledgeBase append_run_record(KnowledgeBase kb, RunRecord record);

void to_json(nlohmann::json& j, const KnowledgeBase& kb);
void from_json(const nlohmann::json& j, KnowledgeBase& kb);

/// Writes the knowledge base as a single schema-versioned JSON document.
void persist(const KnowledgeBase& kb, const std::filesystem::path& path);
/// Errc::io, Errc::schema_mismatch or Errc::malformed_store on failure.
KnowledgeBase load(const std::filesystem::path& path);

}  // namespace adaptloop

#include <mutex>

namespace adaptloop {

/// Coordinator-owned handle that serializes access to a KnowledgeBase.
/// Readers only ever see whole snapshots.
class KnowledgeStore {
public:
    KnowledgeStore() = default;
    explicit KnowledgeStore(KnowledgeBase kb) : kb_(std::move(kb)) {}

    void register_strategy(AdaptationStrategy strategy);
    std::optional<AdaptationStrategy> fetch_latest_strategy() const;
    KnowledgeBase snapshot() const;

private:
    mutable std::mutex mu_;
    KnowledgeBase kb_;
};

}  // namespace adaptloop
