#pragma once

#include "llmrl/mdp/environment.hpp"

namespace llmrl::env {

/// Five-state deterministic chain used as a tabular sanity task.
///   action 0 (left):  s -> max(s - 1, 0); reward `loop_reward` when already at state 0.
///   action 1 (right): s -> s + 1; entering the last state pays `goal_reward` and terminates.
/// Observations are one-hot; the start state is drawn uniformly from the non-terminal
/// states using the reset seed.
class ChainEnv : public mdp::Environment {
public:
    static constexpr int kStates = 5;

    explicit ChainEnv(double gamma = 0.9, int max_steps = 50, double goal_reward = 10.0, double loop_reward = 0.5);

    const mdp::EnvSpec& spec() const override { return spec_; }
    int state() const noexcept { return state_; }

    /// Deterministic model: next state, reward, terminal flag.
    struct Outcome {
        int next_state;
        double reward;
        bool terminal;
    };
    Outcome model(int state, int action) const;

protected:
    Eigen::VectorXd do_reset(std::uint64_t seed) override;
    mdp::StepResult do_step(const mdp::Action& action) override;

private:
    Eigen::VectorXd observe() const;

    mdp::EnvSpec spec_;
    double goal_reward_;
    double loop_reward_;
    int state_ = 0;
};

}  // namespace llmrl::env
