#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmrl/harness/config.hpp"
#include "llmrl/mdp/environment.hpp"
#include "llmrl/mdp/episode.hpp"
#include "llmrl/roles/reward_designer.hpp"

namespace llmrl::harness {

/// One JSONL row per episode. Every field is deterministic given (config, seed, scripts).
struct EpisodeRow {
    int episode = 0;
    double ret = 0.0;  // sum of the rewards the agent was trained on
    int steps = 0;
    double energy = 0.0;     // UAV
    double collected = 0.0;  // UAV
    double delivered = 0.0;  // SAGIN
    int handovers = 0;       // SAGIN
    double epsilon = 0.0;
    double alpha = 0.0;  // TQC entropy temperature; 0 for other agents
    std::string theta_hash;
    double critic_loss = 0.0;  // mean over the episode's updates; 0 when none happened
    double actor_loss = 0.0;
    bool intervention = false;
    bool rollback = false;

    double metric(const std::string& name) const;
    nlohmann::json to_json() const;
    static EpisodeRow from_json(const nlohmann::json& j);
};

struct SeedSummary {
    std::uint64_t seed = 0;
    int episodes = 0;
    int window = 0;
    std::string metric;
    double final_mean = 0.0;
    double final_std = 0.0;
    double final_return_mean = 0.0;
    std::size_t interventions = 0;
    std::size_t rollbacks = 0;
    double wall_clock_seconds = 0.0;

    nlohmann::json to_json() const;
    static SeedSummary from_json(const nlohmann::json& j);
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::vector<EpisodeRow> rows;
    SeedSummary summary;
    std::string directory;
};

/// Environment named by the config, with its scenario applied.
std::unique_ptr<mdp::Environment> make_environment(const ExperimentConfig& config);

/// Reward task for llm-designed mode: feature whitelist, probe ranges and constants.
roles::RewardTask reward_task(const ExperimentConfig& config, const mdp::EnvSpec& spec);
std::vector<roles::FeatureRange> probe_ranges(const ExperimentConfig& config, const mdp::EnvSpec& spec);

/// Generates probes and runs the reward designer; the candidate ledger goes to
/// `ledger_path` (when non-empty). Throws DesignError when no candidate validates.
roles::DesignResult design_for(const ExperimentConfig& config, const std::string& ledger_path,
                               const std::string& audit_path);

/// Whitelisted hyperparameters for the config, with range overrides applied.
roles::HyperparamSet initial_hyperparameters(const ExperimentConfig& config);

/// Backend answering guider prompts by the scripted rule (see ScriptedGuidance).
std::unique_ptr<llm::LlmBackend> scripted_guider(const ScriptedGuidance& script);

/// Trains every seed of the config and persists
///   <out>/<id>/config.json, candidates.jsonl (llm-designed), summary.json,
///   <out>/<id>/seed_<s>/{episodes.jsonl, summary.json, guidance.jsonl, audit.jsonl}.
/// Seeds run on up to config.workers threads. Throws ConfigError when the run directory
/// already holds a summary and `overwrite` is false.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, bool overwrite = false);

/// A single seed, written below `seed_dir`. `reward` overrides the environment reward when set.
RunRecord run_seed(const ExperimentConfig& config, std::uint64_t seed, const mdp::RewardOverride* reward,
                   const std::string& seed_dir);

/// Reads the episode rows of every seed_<s> directory under a run directory.
std::vector<RunRecord> load_run(const std::string& run_dir);

/// Hex FNV-1a hash of a JSON document's compact serialization.
std::string json_hash(const nlohmann::json& j);

}  // namespace llmrl::harness
