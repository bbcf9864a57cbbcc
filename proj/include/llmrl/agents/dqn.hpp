#pragma once

#include "llmrl/agents/agent.hpp"
#include "llmrl/nn/adam.hpp"
#include "llmrl/nn/mlp.hpp"

namespace llmrl::agents {

/// Q-network agent for discrete action spaces with a Polyak-averaged target network.
class DqnAgent : public Agent {
public:
    DqnAgent(const mdp::EnvSpec& spec, AgentConfig config);

    std::string name() const override { return "dqn"; }
    mdp::Action select_action(const Eigen::VectorXd& observation, bool explore,
                              const std::optional<mdp::ActionMask>& mask = std::nullopt) override;
    LossSummary train_step(const Replay& buffer) override;

    Eigen::VectorXd q_values(const Eigen::VectorXd& observation) const;
    nn::Mlp& q_network() noexcept { return q_; }

protected:
    void on_learning_rate_changed() override;

private:
    nn::Mlp q_;
    nn::Mlp target_;
    nn::Adam optimizer_;
};

}  // namespace llmrl::agents
