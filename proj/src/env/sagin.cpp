#include "llmrl/env/sagin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "llmrl/agents/agent.hpp"
#include "llmrl/errors.hpp"

namespace llmrl::env {

void ExplorationSchedule::check() const {
    if (!(epsilon0 >= 0.0)) throw ConfigError("epsilon0 must be non-negative");
    if (total_episodes <= 0) throw ConfigError("total_episodes must be positive");
    if (!(e_decay > 0.0 && e_decay <= 1.0)) throw ConfigError("e_decay must lie in (0, 1]");
}

double ExplorationSchedule::epsilon(double e) const {
    if (!(e >= 0.0)) throw ContractError("episode index must be non-negative");
    return std::max(epsilon0 * (1.0 - e / (e_decay * static_cast<double>(total_episodes))), 0.0);
}

void SaginScenario::check() const {
    if (n_satellites <= 0 || n_clusters <= 0) throw ConfigError("need at least one satellite and one cluster");
    if (horizon <= 0) throw ConfigError("horizon must be positive");
    if (!(orbit_period > 0.0)) throw ConfigError("orbit_period must be positive");
    if (static_cast<int>(fso_capacity.size()) != n_satellites) {
        throw ConfigError("fso_capacity needs one entry per satellite");
    }
    for (double c : fso_capacity) {
        if (!(c > 0.0)) throw ConfigError("fso capacities must be positive");
    }
    if (!(fso_floor >= 0.0 && fso_floor <= 1.0)) throw ConfigError("fso_floor must lie in [0, 1]");
    if (subcarriers <= 0 || !(bandwidth > 0.0)) throw ConfigError("subcarriers and bandwidth must be positive");
    if (!(tx_power > 0.0 && noise_power > 0.0)) throw ConfigError("tx_power and noise_power must be positive");
    if (!(gain_min > 0.0 && gain_max >= gain_min)) throw ConfigError("gain range must satisfy 0 < min <= max");
    if (!(gain_drift >= 0.0)) throw ConfigError("gain_drift must be non-negative");
    if (!initial_gains.empty()) {
        if (static_cast<int>(initial_gains.size()) != n_clusters) throw ConfigError("initial_gains needs one entry per cluster");
        for (double g : initial_gains) {
            if (!(g >= gain_min && g <= gain_max)) throw ConfigError("initial gains must lie in the gain range");
        }
    }
    if (!(allocation_sharpness > 0.0)) throw ConfigError("allocation_sharpness must be positive");
    if (!(handover_penalty >= 0.0)) throw ConfigError("handover_penalty must be non-negative");
    if (!(throughput_scale > 0.0)) throw ConfigError("throughput_scale must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");

    if (!visibility.empty()) {
        for (std::size_t t = 0; t < visibility.size(); ++t) {
            const auto& row = visibility[t];
            if (static_cast<int>(row.size()) != n_satellites) {
                throw ConfigError("visibility row " + std::to_string(t) + " has the wrong length");
            }
            if (std::none_of(row.begin(), row.end(), [](bool b) { return b; })) {
                throw ConfigError("no satellite visible at slot " + std::to_string(t));
            }
        }
        return;
    }
    for (int t = 0; t <= horizon; ++t) {
        bool any = false;
        for (int k = 0; k < n_satellites && !any; ++k) {
            any = std::sin(2.0 * std::numbers::pi * (t / orbit_period + static_cast<double>(k) / n_satellites)) >
                  visibility_threshold;
        }
        if (!any) throw ConfigError("no satellite visible at slot " + std::to_string(t));
    }
}

SaginScenario SaginScenario::from_json(const nlohmann::json& j) {
    SaginScenario s;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("n_satellites", s.n_satellites);
    get("n_clusters", s.n_clusters);
    get("horizon", s.horizon);
    get("orbit_period", s.orbit_period);
    get("visibility_threshold", s.visibility_threshold);
    get("visibility", s.visibility);
    get("fso_capacity", s.fso_capacity);
    get("fso_floor", s.fso_floor);
    get("subcarriers", s.subcarriers);
    get("bandwidth", s.bandwidth);
    get("tx_power", s.tx_power);
    get("noise_power", s.noise_power);
    get("gain_min", s.gain_min);
    get("gain_max", s.gain_max);
    get("gain_drift", s.gain_drift);
    get("initial_gains", s.initial_gains);
    get("allocation_sharpness", s.allocation_sharpness);
    get("handover_penalty", s.handover_penalty);
    get("throughput_scale", s.throughput_scale);
    get("gamma", s.gamma);
    const nlohmann::json known = s.to_json();
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown SAGIN scenario key '" + key + "'");
    }
    s.check();
    return s;
}

nlohmann::json SaginScenario::to_json() const {
    return nlohmann::json{{"n_satellites", n_satellites},
                          {"n_clusters", n_clusters},
                          {"horizon", horizon},
                          {"orbit_period", orbit_period},
                          {"visibility_threshold", visibility_threshold},
                          {"visibility", visibility},
                          {"fso_capacity", fso_capacity},
                          {"fso_floor", fso_floor},
                          {"subcarriers", subcarriers},
                          {"bandwidth", bandwidth},
                          {"tx_power", tx_power},
                          {"noise_power", noise_power},
                          {"gain_min", gain_min},
                          {"gain_max", gain_max},
                          {"gain_drift", gain_drift},
                          {"initial_gains", initial_gains},
                          {"allocation_sharpness", allocation_sharpness},
                          {"handover_penalty", handover_penalty},
                          {"throughput_scale", throughput_scale},
                          {"gamma", gamma}};
}

double rf_throughput(const std::vector<double>& fractions, const std::vector<double>& sinr, int subcarriers,
                     double bandwidth) {
    if (fractions.size() != sinr.size()) throw ShapeError("fractions and sinr must have equal length");
    double total = 0.0;
    for (std::size_t c = 0; c < sinr.size(); ++c) {
        total += fractions[c] * subcarriers * bandwidth * std::log2(1.0 + sinr[c]);
    }
    return total;
}

SaginEnv::SaginEnv(SaginScenario scenario) : scenario_(std::move(scenario)) {
    scenario_.check();
    const int k = scenario_.n_satellites;
    const int c = scenario_.n_clusters;
    spec_.action = mdp::ActionSpace::continuous(Eigen::VectorXd::Constant(k + c, -1.0), Eigen::VectorXd::Constant(k + c, 1.0));
    spec_.gamma = scenario_.gamma;
    spec_.max_steps_per_episode = scenario_.horizon;
    for (int i = 0; i < k; ++i) spec_.feature_names.push_back("visible_" + std::to_string(i));
    for (int i = 0; i < c; ++i) spec_.feature_names.push_back("gain_" + std::to_string(i));
    for (int i = 0; i < k; ++i) spec_.feature_names.push_back("previous_" + std::to_string(i));
    for (int i = 0; i < k; ++i) spec_.feature_names.push_back("backhaul_" + std::to_string(i));
    spec_.feature_names.push_back("phase_sin");
    spec_.feature_names.push_back("phase_cos");
    spec_.state_dim = spec_.feature_names.size();
    spec_.feature_scales = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec_.state_dim));
    const double cap_max = *std::max_element(scenario_.fso_capacity.begin(), scenario_.fso_capacity.end());
    for (int i = 0; i < k; ++i) spec_.feature_scales[2 * k + c + i] = cap_max;
    for (int i = 0; i < c; ++i) spec_.feature_scales[k + i] = scenario_.gain_max / 2.0;
    spec_.check();
}

double SaginEnv::elevation(int k, int slot) const {
    return std::sin(2.0 * std::numbers::pi *
                    (slot / scenario_.orbit_period + static_cast<double>(k) / scenario_.n_satellites));
}

mdp::ActionMask SaginEnv::visibility_mask(int slot) const {
    if (slot < 0 || slot > scenario_.horizon) throw ContractError("slot outside the horizon");
    if (!scenario_.visibility.empty()) {
        return scenario_.visibility[static_cast<std::size_t>(slot) % scenario_.visibility.size()];
    }
    mdp::ActionMask mask(static_cast<std::size_t>(scenario_.n_satellites));
    for (int k = 0; k < scenario_.n_satellites; ++k) {
        mask[static_cast<std::size_t>(k)] = elevation(k, slot) > scenario_.visibility_threshold;
    }
    return mask;
}

std::optional<mdp::ActionMask> SaginEnv::action_mask() const {
    return visibility_mask(slot_);
}

std::vector<double> SaginEnv::backhaul_capacity(int slot) const {
    const auto mask = visibility_mask(slot);
    std::vector<double> caps(static_cast<std::size_t>(scenario_.n_satellites), 0.0);
    for (int k = 0; k < scenario_.n_satellites; ++k) {
        if (!mask[static_cast<std::size_t>(k)]) continue;
        // Explicit schedules carry no elevation; treat visible satellites as fully raised.
        const double elev = scenario_.visibility.empty() ? std::clamp(elevation(k, slot), 0.0, 1.0) : 1.0;
        caps[static_cast<std::size_t>(k)] =
            scenario_.fso_capacity[static_cast<std::size_t>(k)] * (scenario_.fso_floor + (1.0 - scenario_.fso_floor) * elev);
    }
    return caps;
}

std::vector<double> SaginEnv::sinr() const {
    std::vector<double> out(gains_.size());
    for (std::size_t c = 0; c < gains_.size(); ++c) out[c] = scenario_.tx_power * gains_[c] / scenario_.noise_power;
    return out;
}

Eigen::VectorXd SaginEnv::do_reset(std::uint64_t seed) {
    rng_.seed(seed);
    slot_ = 0;
    previous_ = -1;
    info_ = {};
    pending_.reset();
    if (!scenario_.initial_gains.empty()) {
        gains_ = scenario_.initial_gains;
    } else {
        std::uniform_real_distribution<double> initial(0.5, 3.0);
        gains_.assign(static_cast<std::size_t>(scenario_.n_clusters), 0.0);
        for (auto& g : gains_) g = std::clamp(initial(rng_), scenario_.gain_min, scenario_.gain_max);
    }
    return observe();
}

mdp::StepResult SaginEnv::step_decision(const SaginDecision& decision) {
    pending_ = decision;
    try {
        const auto zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec_.action.dim()));
        auto result = step(mdp::Action::continuous(zero));
        pending_.reset();
        return result;
    } catch (...) {
        pending_.reset();
        throw;
    }
}

mdp::StepResult SaginEnv::do_step(const mdp::Action& action) {
    if (pending_) return apply(*pending_);
    const auto mask = visibility_mask(slot_);
    Eigen::VectorXd logits = action.values();
    logits.tail(scenario_.n_clusters) *= scenario_.allocation_sharpness;
    const auto hybrid = agents::decode_hybrid_action(logits, scenario_.n_satellites, mask);
    return apply(SaginDecision{hybrid.choice, hybrid.fractions});
}

mdp::StepResult SaginEnv::apply(const SaginDecision& decision) {
    const int k = decision.satellite;
    if (k < 0 || k >= scenario_.n_satellites) throw ContractError("satellite index out of range");
    const auto mask = visibility_mask(slot_);
    if (!mask[static_cast<std::size_t>(k)]) {
        throw ContractError("satellite " + std::to_string(k) + " is not visible at slot " + std::to_string(slot_));
    }
    if (static_cast<int>(decision.fractions.size()) != scenario_.n_clusters) {
        throw ContractError("allocation needs one fraction per cluster");
    }
    double sum = 0.0;
    for (double f : decision.fractions) {
        if (!(f >= 0.0)) throw ContractError("allocation fractions must be non-negative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ContractError("allocation fractions must sum to 1");

    info_.rf_throughput = rf_throughput(decision.fractions, sinr(), scenario_.subcarriers, scenario_.bandwidth);
    info_.fso_capacity = backhaul_capacity(slot_)[static_cast<std::size_t>(k)];
    info_.delivered = std::min(info_.fso_capacity, info_.rf_throughput);
    info_.handover = previous_ >= 0 && previous_ != k;
    const double reward =
        info_.delivered / scenario_.throughput_scale - (info_.handover ? scenario_.handover_penalty : 0.0);

    previous_ = k;
    ++slot_;
    if (scenario_.gain_drift > 0.0) {
        std::normal_distribution<double> drift(0.0, scenario_.gain_drift);
        for (auto& g : gains_) g = std::clamp(g + drift(rng_), scenario_.gain_min, scenario_.gain_max);
    }
    return {observe(), reward, false, false};
}

Eigen::VectorXd SaginEnv::observe() const {
    const int k = scenario_.n_satellites;
    const int c = scenario_.n_clusters;
    Eigen::VectorXd obs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(spec_.state_dim));
    const int slot = std::min(slot_, scenario_.horizon);
    const auto mask = visibility_mask(slot);
    const auto caps = backhaul_capacity(slot);
    for (int i = 0; i < k; ++i) {
        obs[i] = mask[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        obs[2 * k + c + i] = caps[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < c; ++i) obs[k + i] = gains_[static_cast<std::size_t>(i)];
    if (previous_ >= 0) obs[k + c + previous_] = 1.0;
    const double phase = 2.0 * std::numbers::pi * slot / scenario_.orbit_period;
    obs[3 * k + c] = std::sin(phase);
    obs[3 * k + c + 1] = std::cos(phase);
    return obs;
}

}  // namespace llmrl::env
