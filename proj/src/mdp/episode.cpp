#include "llmrl/mdp/episode.hpp"

#include <algorithm>
#include <cmath>

#include "llmrl/errors.hpp"

namespace llmrl::mdp {
namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

}  // namespace

nlohmann::json Episode::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& t : transitions) {
        nlohmann::json row;
        row["step"] = t.step_index;
        row["state"] = vector_json(t.state);
        if (t.action.is_discrete()) {
            row["action"] = t.action.index();
        } else {
            row["action"] = vector_json(t.action.values());
        }
        row["reward"] = t.reward;
        row["next_state"] = vector_json(t.next_state);
        row["done"] = t.done;
        row["truncated"] = t.truncated;
        rows.push_back(std::move(row));
    }
    return {{"seed", seed}, {"total_reward", total_reward}, {"transitions", std::move(rows)}};
}

double compute_return(std::span<const double> rewards, double gamma) {
    double g = 0.0;
    for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) g = *it + gamma * g;
    return g;
}

std::vector<std::string> reward_schema(const EnvSpec& spec, const dsl::Bindings& constants) {
    std::vector<std::string> schema = spec.feature_names;
    for (const auto& [name, value] : constants) {
        if (std::find(schema.begin(), schema.end(), name) == schema.end()) schema.push_back(name);
    }
    return schema;
}

void check_override(const RewardOverride& reward, const EnvSpec& spec) {
    for (const auto& name : reward.expr.referenced_features()) {
        if (!spec.feature_index(name) && reward.constants.find(name) == reward.constants.end()) {
            throw UnknownFeatureError(name);
        }
    }
}

double evaluate_override(const RewardOverride& reward, const EnvSpec& spec, const Eigen::VectorXd& observation) {
    const auto& schema = reward.expr.schema();
    std::vector<double> values(schema.size(), 0.0);
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (auto idx = spec.feature_index(schema[i])) {
            values[i] = observation[static_cast<Eigen::Index>(*idx)];
        } else if (auto it = reward.constants.find(schema[i]); it != reward.constants.end()) {
            values[i] = it->second;
        } else {
            // Unreferenced schema entries never reach evaluation; referenced ones were checked.
            values[i] = 0.0;
        }
    }
    return dsl::evaluate(reward.expr, std::span<const double>(values));
}

Episode run_episode(Environment& env, const Policy& policy, std::uint64_t seed, const RewardOverride* reward_fn) {
    const auto& spec = env.spec();
    if (reward_fn != nullptr) check_override(*reward_fn, spec);

    Episode episode;
    episode.seed = seed;
    Eigen::VectorXd obs = env.reset(seed);
    for (int step = 0;; ++step) {
        const auto mask = env.action_mask();
        Action action = policy(obs, mask);
        StepResult result = env.step(action);
        double reward = result.reward;
        if (reward_fn != nullptr) reward = evaluate_override(*reward_fn, spec, result.observation);
        if (!std::isfinite(reward)) throw NumericError("non-finite reward at step " + std::to_string(step));
        episode.total_reward += reward;
        episode.transitions.push_back(
            Transition{obs, std::move(action), reward, result.observation, result.done, result.truncated, step});
        obs = std::move(result.observation);
        if (result.done) break;
    }
    return episode;
}

}  // namespace llmrl::mdp
