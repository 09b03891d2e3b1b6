#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sce/client.hpp"
#include "sce/extraction.hpp"
#include "sce/prompts.hpp"
#include "sce/tasks.hpp"

namespace sce {

// Default trial counts: one at T=0, five at T=0.5 (three for CoT).
int default_trials(double temperature, Strategy strategy);

struct RunConfig {
    std::string task_id;
    Strategy strategy = Strategy::unconstrained;
    double temperature = 0.0;
    int trials = 1;
    std::uint64_t seed = 0;
    int subset_per_class = 250;
    std::string dataset_path;
    BackendConfig backend;
    GenConfig gen;
    // Wall-clock stamps are off by default: with a deterministic backend a
    // store must be bit-reproducible.
    bool wall_clock_timestamps = false;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    // Stable hash of the canonical JSON form; resume refuses stores
    // written under a different hash.
    std::string hash() const;
    void validate() const;
};

struct StepTrace {
    Conversation conversation;
    std::string raw;
    ParsedAnswer parsed;
};

struct SceTrace {
    Conversation conversation;
    std::string raw;
    std::optional<std::string> sce;
    FilterOutcome filter;
};

struct RepredictTrace {
    std::string raw;
    ParsedAnswer parsed;
};

// Full trace of Steps 1-3 for one (example, trial). Later steps are
// absent when an earlier gate (unparseable answer, missing rationales,
// filtered SCE, backend failure) ended the record.
struct RunRecord {
    std::string example_id;
    int trial = 0;
    std::uint64_t seq = 0;
    bool failed = false;
    std::string failure;

    std::optional<GoldValue> gold;
    std::string sce_source;  // the field text the SCE rewrites, kept for scoring

    std::optional<StepTrace> step1;
    std::optional<TargetLabel> target;
    std::optional<std::string> rationale_raw;
    std::optional<std::vector<std::string>> rationales;
    std::optional<SceTrace> step2;
    std::optional<RepredictTrace> step3_with;
    std::optional<RepredictTrace> step3_without;

    double latency_s = 0.0;
    std::optional<std::string> started_at;
    std::optional<std::string> finished_at;

    bool kept() const { return step2 && step2->filter.kept; }

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);
};

// Append-only JSONL store: a header line carrying the RunConfig and its
// hash, then one RunRecord per line.
class RunStore {
public:
    static RunStore create(const std::filesystem::path& path, const RunConfig& config);
    // Tolerates a truncated final line (interrupted run); the partial
    // line is dropped from records() and flagged.
    static RunStore open(const std::filesystem::path& path);

    void append(const RunRecord& record);

    const RunConfig& config() const { return config_; }
    const std::string& config_hash() const { return config_hash_; }
    const std::vector<RunRecord>& records() const { return records_; }
    const std::filesystem::path& path() const { return path_; }
    bool had_truncated_tail() const { return truncated_tail_; }

private:
    std::filesystem::path path_;
    RunConfig config_;
    std::string config_hash_;
    std::vector<RunRecord> records_;
    bool truncated_tail_ = false;
};

// Runs Steps 1-3 for every (example, trial) pair over a bounded worker
// pool (backend.max_in_flight workers); records land in the store in
// canonical example-major order regardless of completion order.
RunStore run_pipeline(const RunConfig& config, const std::vector<Example>& examples,
                      ChatBackend& backend, const std::filesystem::path& out_path);

// Skips (example, trial) pairs already present; the finished store is
// indistinguishable from an uninterrupted run given a deterministic
// backend. Aborts when the embedded config hash differs.
RunStore resume_pipeline(const std::filesystem::path& store_path, const RunConfig& config,
                         const std::vector<Example>& examples, ChatBackend& backend);

}  // namespace sce
