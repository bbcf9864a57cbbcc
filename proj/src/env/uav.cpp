#include "llmrl/env/uav.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "llmrl/dsl/reward_expr.hpp"
#include "llmrl/errors.hpp"

namespace llmrl::env {
namespace {

constexpr double kCriticalBattery = 0.1;
constexpr double kPenaltyFactor = 2.0;
constexpr std::size_t kFreshnessOffset = 9;

double distance(const Point& a, const Point& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

bool inside(const Point& p, double size) {
    return p[0] >= 0.0 && p[0] <= size && p[1] >= 0.0 && p[1] <= size;
}

std::vector<std::string> base_features() {
    return {"energy", "position_score", "penalty", "battery_frac", "x", "y", "centroid_dx", "centroid_dy", "mission_progress"};
}

}  // namespace

void UavScenario::check() const {
    if (!(area_size > 0.0)) throw ConfigError("area_size must be positive");
    if (layout != "uniform" && layout != "cluster") throw ConfigError("layout must be 'uniform' or 'cluster'");
    if (terminals.empty() && n_terminals <= 0) throw ConfigError("scenario needs at least one terminal");
    for (const auto& t : terminals) {
        if (!inside(t, area_size)) throw ConfigError("terminal lies outside the area");
    }
    if (!inside(mbs, area_size)) throw ConfigError("mbs lies outside the area");
    if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
    if (!(hover_speed >= 0.0 && hover_speed < v_max)) throw ConfigError("hover_speed must lie in [0, v_max)");
    if (!(collection_radius > 0.0)) throw ConfigError("collection_radius must be positive");
    if (!(c_move >= 0.0 && c_hover >= 0.0 && c_tx >= 0.0)) throw ConfigError("energy coefficients must be non-negative");
    if (!(battery_capacity > 0.0)) throw ConfigError("battery_capacity must be positive");
    if (!(initial_freshness >= 0.0)) throw ConfigError("initial_freshness must be non-negative");
    if (!(data_rate > 0.0)) throw ConfigError("data_rate must be positive");
    if (!(mission_quota >= 0.0)) throw ConfigError("mission_quota must be non-negative");
    if (horizon <= 0) throw ConfigError("horizon must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (!(start_radius >= 0.0)) throw ConfigError("start_radius must be non-negative");
    if (!(cluster_spread >= 0.0)) throw ConfigError("cluster_spread must be non-negative");
}

double UavScenario::effective_position_scale() const {
    return position_scale > 0.0 ? position_scale : std::sqrt(2.0) * area_size;
}

UavScenario UavScenario::from_json(const nlohmann::json& j) {
    UavScenario s;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("area_size", s.area_size);
    get("n_terminals", s.n_terminals);
    get("layout", s.layout);
    get("cluster_center", s.cluster_center);
    get("cluster_spread", s.cluster_spread);
    get("layout_seed", s.layout_seed);
    get("terminals", s.terminals);
    get("mbs", s.mbs);
    get("start_radius", s.start_radius);
    get("altitude", s.altitude);
    get("v_max", s.v_max);
    get("hover_speed", s.hover_speed);
    get("collection_radius", s.collection_radius);
    get("c_move", s.c_move);
    get("c_hover", s.c_hover);
    get("c_tx", s.c_tx);
    get("battery_capacity", s.battery_capacity);
    get("initial_freshness", s.initial_freshness);
    get("data_rate", s.data_rate);
    get("mission_quota", s.mission_quota);
    get("horizon", s.horizon);
    get("gamma", s.gamma);
    get("position_scale", s.position_scale);
    for (const auto& [key, _] : j.items()) {
        if (!s.to_json().contains(key)) throw ConfigError("unknown UAV scenario key '" + key + "'");
    }
    s.check();
    return s;
}

nlohmann::json UavScenario::to_json() const {
    return nlohmann::json{{"area_size", area_size},
                          {"n_terminals", n_terminals},
                          {"layout", layout},
                          {"cluster_center", cluster_center},
                          {"cluster_spread", cluster_spread},
                          {"layout_seed", layout_seed},
                          {"terminals", terminals},
                          {"mbs", mbs},
                          {"start_radius", start_radius},
                          {"altitude", altitude},
                          {"v_max", v_max},
                          {"hover_speed", hover_speed},
                          {"collection_radius", collection_radius},
                          {"c_move", c_move},
                          {"c_hover", c_hover},
                          {"c_tx", c_tx},
                          {"battery_capacity", battery_capacity},
                          {"initial_freshness", initial_freshness},
                          {"data_rate", data_rate},
                          {"mission_quota", mission_quota},
                          {"horizon", horizon},
                          {"gamma", gamma},
                          {"position_scale", position_scale}};
}

std::vector<Point> terminal_layout(const UavScenario& scenario) {
    if (!scenario.terminals.empty()) return scenario.terminals;
    std::mt19937_64 rng(scenario.layout_seed);
    std::vector<Point> out;
    const double size = scenario.area_size;
    if (scenario.layout == "uniform") {
        std::uniform_real_distribution<double> coord(0.0, size);
        for (int i = 0; i < scenario.n_terminals; ++i) out.push_back({coord(rng), coord(rng)});
    } else {
        std::normal_distribution<double> offset(0.0, scenario.cluster_spread);
        for (int i = 0; i < scenario.n_terminals; ++i) {
            out.push_back({std::clamp(scenario.cluster_center[0] + offset(rng), 0.0, size),
                           std::clamp(scenario.cluster_center[1] + offset(rng), 0.0, size)});
        }
    }
    return out;
}

Point terminal_centroid(const UavWorld& world) {
    if (world.terminals.empty()) throw ContractError("centroid needs at least one terminal");
    Point centroid{0.0, 0.0};
    for (const auto& t : world.terminals) {
        centroid[0] += t[0];
        centroid[1] += t[1];
    }
    centroid[0] /= static_cast<double>(world.terminals.size());
    centroid[1] /= static_cast<double>(world.terminals.size());
    return centroid;
}

double position_score(const UavWorld& world, double scale) {
    if (world.terminals.empty()) throw ContractError("position_score needs at least one terminal");
    if (!(scale > 0.0)) throw ContractError("position_score scale must be positive");
    return 1.0 / (1.0 + distance(world.position, terminal_centroid(world)) / scale);
}

mdp::RewardOverride manual_reward(double w) {
    return {dsl::parse("-w * energy * penalty", {"energy", "penalty", "w"}), {{"w", w}}};
}

mdp::RewardOverride enriched_reward(double w1, double w2) {
    return {dsl::parse("-(w1 * energy - w2 * position_score) * penalty", {"energy", "position_score", "penalty", "w1", "w2"}),
            {{"w1", w1}, {"w2", w2}}};
}

UavEnv::UavEnv(UavScenario scenario) : scenario_(std::move(scenario)) {
    scenario_.check();
    world_.terminals = terminal_layout(scenario_);
    world_.mbs = scenario_.mbs;
    world_.altitude = scenario_.altitude;

    const double half = scenario_.v_max / std::sqrt(2.0);
    spec_.action = mdp::ActionSpace::continuous(Eigen::VectorXd::Constant(2, -half), Eigen::VectorXd::Constant(2, half));
    spec_.gamma = scenario_.gamma;
    spec_.max_steps_per_episode = scenario_.horizon;
    spec_.feature_names = base_features();
    const std::size_t n = world_.terminals.size();
    for (std::size_t i = 0; i < n; ++i) spec_.feature_names.push_back("freshness_" + std::to_string(i));
    spec_.state_dim = spec_.feature_names.size();

    // Agent-side input normalization: energy by the cost of a full-speed slot, positions by
    // the area size, freshness by the horizon.
    spec_.feature_scales = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec_.state_dim));
    spec_.feature_scales[0] = std::max(1.0, scenario_.c_move * scenario_.v_max * scenario_.v_max);
    spec_.feature_scales[4] = scenario_.area_size;
    spec_.feature_scales[5] = scenario_.area_size;
    spec_.feature_scales[6] = scenario_.area_size;
    spec_.feature_scales[7] = scenario_.area_size;
    for (std::size_t i = 0; i < n; ++i) {
        spec_.feature_scales[static_cast<Eigen::Index>(kFreshnessOffset + i)] = static_cast<double>(scenario_.horizon);
    }
    spec_.check();
}

Eigen::VectorXd UavEnv::do_reset(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = scenario_.start_radius * std::sqrt(unit(rng));
    const double theta = 2.0 * 3.14159265358979323846 * unit(rng);
    world_.position = {std::clamp(scenario_.mbs[0] + r * std::cos(theta), 0.0, scenario_.area_size),
                       std::clamp(scenario_.mbs[1] + r * std::sin(theta), 0.0, scenario_.area_size)};
    world_.freshness.assign(world_.terminals.size(), scenario_.initial_freshness);
    world_.battery = scenario_.battery_capacity;
    world_.last_ledger = {};
    world_.collected = 0.0;
    world_.penalty = 1.0;
    world_.boundary_violation = false;
    episode_energy_ = 0.0;
    return observe();
}

mdp::StepResult UavEnv::do_step(const mdp::Action& action) {
    const Eigen::VectorXd& v = action.values();
    const double speed = std::hypot(v[0], v[1]);
    if (speed > scenario_.v_max * (1.0 + 1e-12)) {
        throw ContractError("speed " + std::to_string(speed) + " exceeds v_max " + std::to_string(scenario_.v_max));
    }
    const bool hovering = speed <= scenario_.hover_speed;

    EnergyLedger ledger;
    if (hovering) {
        ledger.hover = scenario_.c_hover;
    } else {
        ledger.move = scenario_.c_move * speed * speed;
        Point next{world_.position[0] + v[0], world_.position[1] + v[1]};
        world_.boundary_violation = !inside(next, scenario_.area_size);
        next[0] = std::clamp(next[0], 0.0, scenario_.area_size);
        next[1] = std::clamp(next[1], 0.0, scenario_.area_size);
        world_.position = next;
    }
    if (hovering) world_.boundary_violation = false;

    for (auto& f : world_.freshness) f += 1.0;
    if (hovering) {
        for (std::size_t i = 0; i < world_.terminals.size(); ++i) {
            if (distance(world_.position, world_.terminals[i]) <= scenario_.collection_radius) {
                const double bits = world_.freshness[i] * scenario_.data_rate;
                ledger.transmit += scenario_.c_tx * bits;
                world_.collected += bits;
                world_.freshness[i] = 0.0;
            }
        }
    }

    const double demanded = ledger.total();
    bool depleted = false;
    if (demanded >= world_.battery) {
        world_.battery = 0.0;
        depleted = true;
    } else {
        world_.battery -= demanded;
    }
    world_.last_ledger = ledger;
    episode_energy_ += demanded;

    const bool critical = world_.battery < kCriticalBattery * scenario_.battery_capacity;
    world_.penalty = (world_.boundary_violation || critical) ? kPenaltyFactor : 1.0;

    const bool mission_done = scenario_.mission_quota > 0.0 && world_.collected >= scenario_.mission_quota;
    const double reward = -demanded * world_.penalty;
    return {observe(), reward, depleted || mission_done, false};
}

Eigen::VectorXd UavEnv::observe() const {
    Eigen::VectorXd obs(static_cast<Eigen::Index>(spec_.state_dim));
    obs[0] = world_.last_ledger.total();
    obs[1] = position_score(world_, scenario_.effective_position_scale());
    obs[2] = world_.penalty;
    obs[3] = world_.battery / scenario_.battery_capacity;
    obs[4] = world_.position[0];
    obs[5] = world_.position[1];
    const Point centroid = terminal_centroid(world_);
    obs[6] = centroid[0] - world_.position[0];
    obs[7] = centroid[1] - world_.position[1];
    obs[8] = scenario_.mission_quota > 0.0 ? std::min(1.0, world_.collected / scenario_.mission_quota) : 0.0;
    for (std::size_t i = 0; i < world_.freshness.size(); ++i) {
        obs[static_cast<Eigen::Index>(kFreshnessOffset + i)] = world_.freshness[i];
    }
    return obs;
}

}  // namespace llmrl::env
