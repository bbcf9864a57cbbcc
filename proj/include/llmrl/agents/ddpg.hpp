#pragma once

#include "llmrl/agents/agent.hpp"
#include "llmrl/nn/adam.hpp"
#include "llmrl/nn/mlp.hpp"

namespace llmrl::agents {

/// Deterministic actor-critic for continuous actions. The actor emits tanh outputs in
/// [-1, 1]^d that are mapped affinely onto the environment's action box.
class DdpgAgent : public Agent {
public:
    DdpgAgent(const mdp::EnvSpec& spec, AgentConfig config);

    std::string name() const override { return "ddpg"; }
    mdp::Action select_action(const Eigen::VectorXd& observation, bool explore,
                              const std::optional<mdp::ActionMask>& mask = std::nullopt) override;
    LossSummary train_step(const Replay& buffer) override;

    nn::Mlp& actor() noexcept { return actor_; }

protected:
    void on_learning_rate_changed() override;

private:
    nn::Mlp actor_, actor_target_;
    nn::Mlp critic_, critic_target_;
    nn::Adam actor_opt_, critic_opt_;
};

/// Twin critics with clipped double-Q targets, target policy smoothing and delayed actor
/// updates (one actor and target update every policy_delay critic updates).
class Td3Agent : public Agent {
public:
    Td3Agent(const mdp::EnvSpec& spec, AgentConfig config);

    std::string name() const override { return "td3"; }
    mdp::Action select_action(const Eigen::VectorXd& observation, bool explore,
                              const std::optional<mdp::ActionMask>& mask = std::nullopt) override;
    LossSummary train_step(const Replay& buffer) override;
    bool set_hyperparameter(const std::string& name, double value) override;

    nn::Mlp& actor() noexcept { return actor_; }

protected:
    void on_learning_rate_changed() override;

private:
    nn::Mlp actor_, actor_target_;
    nn::Mlp critic1_, critic1_target_;
    nn::Mlp critic2_, critic2_target_;
    nn::Adam actor_opt_, critic1_opt_, critic2_opt_;
};

}  // namespace llmrl::agents
