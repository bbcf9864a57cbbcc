#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "llmrl/mdp/episode.hpp"

namespace llmrl::env {

using Point = std::array<double, 2>;

/// Static description of a UAV data-collection scenario. Distances are meters, one step
/// is one time slot, energies are joules.
struct UavScenario {
    double area_size = 1000.0;
    int n_terminals = 10;
    // "uniform": terminals spread over the area; "cluster": around cluster_center.
    std::string layout = "uniform";
    Point cluster_center{700.0, 700.0};
    double cluster_spread = 60.0;
    std::uint64_t layout_seed = 0;
    // Explicit terminal positions override the generated layout when non-empty.
    std::vector<Point> terminals;

    Point mbs{100.0, 100.0};
    // UAV start: MBS position plus a uniform offset in a disk of this radius.
    double start_radius = 100.0;

    double altitude = 100.0;
    double v_max = 50.0;
    // Speeds at or below this count as hovering; velocity is treated as zero.
    double hover_speed = 0.0;
    double collection_radius = 50.0;

    double c_move = 0.5;
    double c_hover = 1.0;
    double c_tx = 0.1;

    double battery_capacity = 5000.0;
    double initial_freshness = 0.0;
    // Data units a terminal accumulates per slot of freshness; a collection transmits
    // freshness * data_rate units.
    double data_rate = 1.0;
    // Episode completes once this many data units are collected; 0 disables the mission.
    double mission_quota = 0.0;
    int horizon = 200;
    double gamma = 0.99;

    // Distance normalization inside position_score; <= 0 selects the area diagonal.
    double position_scale = 0.0;

    /// Throws ConfigError on inconsistent values.
    void check() const;
    double effective_position_scale() const;

    static UavScenario from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct EnergyLedger {
    double move = 0.0;
    double hover = 0.0;
    double transmit = 0.0;
    double total() const noexcept { return move + hover + transmit; }
};

struct UavWorld {
    std::vector<Point> terminals;
    std::vector<double> freshness;
    Point position{0.0, 0.0};
    double altitude = 0.0;
    double battery = 0.0;
    Point mbs{0.0, 0.0};
    EnergyLedger last_ledger;
    double collected = 0.0;
    double penalty = 1.0;
    bool boundary_violation = false;
};

/// Mean terminal position. Throws ContractError when there are no terminals.
Point terminal_centroid(const UavWorld& world);

/// 1 / (1 + d / scale), d the distance from the UAV to the terminal centroid.
/// Throws ContractError when there are no terminals or scale <= 0.
double position_score(const UavWorld& world, double scale);

/// The terminal layout a scenario produces (deterministic in layout_seed).
std::vector<Point> terminal_layout(const UavScenario& scenario);

/// Reward forms over the UAV feature schema, with their weights as DSL constants.
///   manual:   -w * energy * penalty
///   enriched: -(w1 * energy - w2 * position_score) * penalty
mdp::RewardOverride manual_reward(double w = 1.0);
mdp::RewardOverride enriched_reward(double w1 = 1.0, double w2 = 0.5);

/// UAV collecting data from IoT terminals. Action: 2-D velocity (m/slot) inside a box of
/// half-width v_max / sqrt(2), so every box action respects the speed limit. Features:
/// energy, position_score, penalty, battery_frac, x, y, centroid_dx, centroid_dy,
/// mission_progress, freshness_<i>.
/// Built-in reward is the manual form with w = 1.
class UavEnv : public mdp::Environment {
public:
    explicit UavEnv(UavScenario scenario);

    const mdp::EnvSpec& spec() const override { return spec_; }
    const UavWorld& world() const noexcept { return world_; }
    const UavScenario& scenario() const noexcept { return scenario_; }
    /// Sum of per-step ledgers since the last reset.
    double episode_energy() const noexcept { return episode_energy_; }

protected:
    Eigen::VectorXd do_reset(std::uint64_t seed) override;
    mdp::StepResult do_step(const mdp::Action& action) override;

private:
    Eigen::VectorXd observe() const;

    UavScenario scenario_;
    mdp::EnvSpec spec_;
    UavWorld world_;
    double episode_energy_ = 0.0;
};

}  // namespace llmrl::env
