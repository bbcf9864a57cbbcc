#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmrl/dsl/reward_expr.hpp"
#include "llmrl/mdp/environment.hpp"

namespace llmrl::mdp {

struct Episode {
    std::vector<Transition> transitions;
    double total_reward = 0.0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

/// sum_k gamma^k * rewards[k].
double compute_return(std::span<const double> rewards, double gamma);

using Policy = std::function<Action(const Eigen::VectorXd& observation, const std::optional<ActionMask>& mask)>;

/// A reward expression evaluated on the environment's named features after each step,
/// replacing the built-in reward. `constants` bind names that are not state features
/// (reward weights and the like).
struct RewardOverride {
    dsl::RewardExpr expr;
    dsl::Bindings constants;
};

/// Reward schema for an override: the environment's feature names followed by the
/// constant names.
std::vector<std::string> reward_schema(const EnvSpec& spec, const dsl::Bindings& constants);

/// Evaluates an override on an observation (post-step features).
double evaluate_override(const RewardOverride& reward, const EnvSpec& spec, const Eigen::VectorXd& observation);

/// Throws ValidationError if the override references names that are neither features
/// of `spec` nor constants.
void check_override(const RewardOverride& reward, const EnvSpec& spec);

/// Rolls out one episode from reset(seed) until done.
Episode run_episode(Environment& env, const Policy& policy, std::uint64_t seed,
                    const RewardOverride* reward_fn = nullptr);

}  // namespace llmrl::mdp
