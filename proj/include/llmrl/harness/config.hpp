#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmrl/agents/agent.hpp"
#include "llmrl/llm/gateway.hpp"
#include "llmrl/roles/guider.hpp"
#include "llmrl/roles/reward_designer.hpp"

namespace llmrl::harness {

/// Which model serves the LLM roles. "mock" replays per-role scripts
/// ({"replies": [...]} or {"keyed": {...}}); "http" talks to a chat-completion endpoint.
struct BackendSpec {
    std::string kind = "mock";
    nlohmann::json designer_script;  // null when absent
    nlohmann::json guider_script;
    nlohmann::json probe_script;
    nlohmann::json perceiver_script;
    llm::HttpBackendConfig http;
    std::string model = "default";
};

/// Deterministic stand-in for the guider model: at every intervention after
/// `start_progress` it proposes value * factor for each listed hyperparameter.
struct ScriptedGuidance {
    double start_progress = 0.0;
    std::map<std::string, double> factors;
};

/// Certified range override for one whitelisted hyperparameter.
struct RangeOverride {
    std::optional<double> lo;
    std::optional<double> hi;
    std::optional<double> max_factor;
    std::optional<double> max_step;
};

struct DesignSettings {
    int n_candidates = 3;
    std::size_t probe_count = 16;
    std::string task_description;
    std::vector<std::string> constraints;
    std::vector<roles::FeatureRange> probe_ranges;  // empty: environment defaults
    dsl::Bindings constants;                        // empty: {w1: 1, w2: 0.5}
};

struct ExperimentConfig {
    std::string id;
    std::string environment = "uav";  // uav | sagin | chain
    nlohmann::json scenario = nlohmann::json::object();
    std::string algorithm = "td3";
    agents::AgentConfig agent;
    std::string reward_mode = "manual";  // manual | scripted-enriched | llm-designed
    double w = 1.0;
    double w1 = 1.0;
    double w2 = 0.5;
    std::string guidance_mode = "off";  // off | scripted | llm
    roles::GuidanceSettings guidance;
    ScriptedGuidance scripted_guidance;
    std::map<std::string, RangeOverride> hyperparameter_ranges;
    DesignSettings design;
    BackendSpec backend;
    std::vector<std::uint64_t> seeds{0};
    int episodes = 100;
    // Exploration multiplier eps(e) = max(epsilon0 * (1 - e / (exploration_decay * E)), 0).
    double epsilon0 = 1.0;
    double exploration_decay = 1.0;
    int train_every = 1;
    // Episodes in the final window; 0 means max(10, E / 10) capped at E.
    int final_window = 0;
    // Metric compared across arms: "energy" (UAV, lower is better), "return" or "delivered".
    std::string metric;
    std::string output_dir = "runs";
    int workers = 1;

    /// Throws ConfigError on any inconsistency.
    void check() const;
    std::string effective_metric() const;
    bool metric_lower_is_better() const;
    int effective_window() const;

    /// Unknown keys are rejected. `base_dir` resolves a relative "scenario_path".
    static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
    nlohmann::json to_json() const;
};

ExperimentConfig load_config(const std::string& path);

agents::AgentConfig agent_config_from_json(const nlohmann::json& j);
nlohmann::json agent_config_to_json(const agents::AgentConfig& c);

}  // namespace llmrl::harness
