#include "llmrl/env/chain.hpp"

#include <random>

namespace llmrl::env {

ChainEnv::ChainEnv(double gamma, int max_steps, double goal_reward, double loop_reward)
    : goal_reward_(goal_reward), loop_reward_(loop_reward) {
    spec_.state_dim = kStates;
    spec_.action = mdp::ActionSpace::discrete(2);
    spec_.gamma = gamma;
    spec_.max_steps_per_episode = max_steps;
    for (int s = 0; s < kStates; ++s) spec_.feature_names.push_back("s" + std::to_string(s));
    spec_.check();
}

ChainEnv::Outcome ChainEnv::model(int state, int action) const {
    if (action == 0) {
        if (state == 0) return {0, loop_reward_, false};
        return {state - 1, 0.0, false};
    }
    const int next = state + 1;
    if (next == kStates - 1) return {next, goal_reward_, true};
    return {next, 0.0, false};
}

Eigen::VectorXd ChainEnv::do_reset(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> start(0, kStates - 2);
    state_ = start(rng);
    return observe();
}

mdp::StepResult ChainEnv::do_step(const mdp::Action& action) {
    const Outcome out = model(state_, static_cast<int>(action.index()));
    state_ = out.next_state;
    return {observe(), out.reward, out.terminal, false};
}

Eigen::VectorXd ChainEnv::observe() const {
    Eigen::VectorXd obs = Eigen::VectorXd::Zero(kStates);
    obs[state_] = 1.0;
    return obs;
}

}  // namespace llmrl::env
