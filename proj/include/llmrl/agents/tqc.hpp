#pragma once

#include <vector>

#include "llmrl/agents/agent.hpp"
#include "llmrl/nn/adam.hpp"
#include "llmrl/nn/mlp.hpp"

namespace llmrl::agents {

/// Truncated quantile critics with a tanh-Gaussian actor and a fixed entropy temperature.
/// Each critic maps [state; unit action] to n_quantiles return quantiles; targets pool the
/// target critics' quantiles and drop the k_drop_per_critic * n_critics largest.
class TqcAgent : public Agent {
public:
    TqcAgent(const mdp::EnvSpec& spec, AgentConfig config);

    std::string name() const override { return "tqc"; }
    mdp::Action select_action(const Eigen::VectorXd& observation, bool explore,
                              const std::optional<mdp::ActionMask>& mask = std::nullopt) override;
    LossSummary train_step(const Replay& buffer) override;

    /// Also accepts "entropy_alpha" and "truncation_k".
    bool set_hyperparameter(const std::string& name, double value) override;

    /// Mean of the current critics' quantiles at (observation, env-scale action).
    double q_value(const Eigen::VectorXd& observation, const Eigen::VectorXd& env_action) const;

protected:
    void on_learning_rate_changed() override;

private:
    struct PolicySample {
        Eigen::MatrixXd mean, log_std, noise, action;  // action = tanh(mean + exp(log_std) * noise)
        Eigen::RowVectorXd log_prob;
        Eigen::MatrixXd clamp_mask;  // 1 where log_std was inside its clamp range
    };
    PolicySample sample_policy(const Eigen::MatrixXd& actor_output);

    nn::Mlp actor_;
    std::vector<nn::Mlp> critics_, critic_targets_;
    nn::Adam actor_opt_;
    std::vector<nn::Adam> critic_opts_;
    Eigen::VectorXd taus_;
};

}  // namespace llmrl::agents
