#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "llmrl/mdp/environment.hpp"

namespace llmrl::env {

/// Linearly decaying exploration level: eps(e) = max(eps0 * (1 - e / (e_decay * E)), 0).
struct ExplorationSchedule {
    double epsilon0 = 1.0;
    int total_episodes = 1;
    double e_decay = 1.0;

    /// Throws ConfigError unless epsilon0 >= 0, total_episodes > 0, e_decay in (0, 1].
    void check() const;
    /// Throws ContractError for e < 0.
    double epsilon(double e) const;
};

struct SaginScenario {
    int n_satellites = 6;
    int n_clusters = 4;
    int horizon = 100;
    // Sinusoidal elevation proxy: elev_k(t) = sin(2 pi t / period + 2 pi k / K);
    // satellite k is visible while elev_k(t) > visibility_threshold.
    double orbit_period = 40.0;
    double visibility_threshold = 0.5;
    // Explicit slot-by-slot visibility (rows = slots, cycled); overrides the sinusoid when set.
    std::vector<std::vector<bool>> visibility;

    // Backhaul capacity of a visible satellite: fso_capacity[k] * (fso_floor + (1 - fso_floor) * elevation).
    std::vector<double> fso_capacity = {40.0, 36.0, 44.0, 38.0, 42.0, 34.0};
    double fso_floor = 0.5;

    int subcarriers = 64;
    double bandwidth = 1.0;
    double tx_power = 1.0;
    double noise_power = 1.0;
    double gain_min = 0.1;
    double gain_max = 10.0;
    double gain_drift = 0.3;
    // Initial gains per cluster; empty means uniform draws in [0.5, 3] from the episode seed.
    std::vector<double> initial_gains;

    // Allocation logits are multiplied by this before the softmax, so unit-range actor
    // outputs can still concentrate the subcarriers.
    double allocation_sharpness = 4.0;

    double handover_penalty = 0.1;
    double throughput_scale = 40.0;
    double gamma = 0.99;

    /// Throws ConfigError on inconsistent values, including a slot with no visible satellite.
    void check() const;
    static SaginScenario from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct SaginDecision {
    int satellite = 0;
    std::vector<double> fractions;
};

struct SaginStepInfo {
    double rf_throughput = 0.0;
    double fso_capacity = 0.0;
    double delivered = 0.0;
    bool handover = false;
};

/// RF throughput sum_c f_c * N_sc * B * log2(1 + SINR_c).
double rf_throughput(const std::vector<double>& fractions, const std::vector<double>& sinr, int subcarriers, double bandwidth);

/// Satellite selection for the backhaul plus subcarrier split across ground clusters.
/// The generic continuous action has K + C entries: satellite logits then allocation
/// logits (see agents::decode_hybrid_action). Observation: visibility mask (K), cluster
/// gains (C), previous satellite one-hot (K), backhaul capacities (K), sin/cos of the
/// orbit phase.
class SaginEnv : public mdp::Environment {
public:
    explicit SaginEnv(SaginScenario scenario);

    const mdp::EnvSpec& spec() const override { return spec_; }
    std::optional<mdp::ActionMask> action_mask() const override;

    /// Visibility at an absolute slot index. Throws ContractError for slot outside [0, horizon].
    mdp::ActionMask visibility_mask(int slot) const;

    /// Applies an explicit decision. Throws ContractError for an invisible satellite or
    /// fractions that are negative or do not sum to 1.
    mdp::StepResult step_decision(const SaginDecision& decision);

    const SaginStepInfo& last_info() const noexcept { return info_; }
    int previous_satellite() const noexcept { return previous_; }
    const std::vector<double>& gains() const noexcept { return gains_; }
    int slot() const noexcept { return slot_; }
    const SaginScenario& scenario() const noexcept { return scenario_; }
    std::vector<double> sinr() const;
    std::vector<double> backhaul_capacity(int slot) const;

protected:
    Eigen::VectorXd do_reset(std::uint64_t seed) override;
    mdp::StepResult do_step(const mdp::Action& action) override;

private:
    double elevation(int k, int slot) const;
    mdp::StepResult apply(const SaginDecision& decision);
    Eigen::VectorXd observe() const;

    SaginScenario scenario_;
    mdp::EnvSpec spec_;
    std::vector<double> gains_;
    int previous_ = -1;
    int slot_ = 0;
    SaginStepInfo info_;
    std::mt19937_64 rng_;
    std::optional<SaginDecision> pending_;
};

}  // namespace llmrl::env
