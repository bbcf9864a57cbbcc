#include "llmrl/agents/dqn.hpp"

#include <algorithm>

#include "llmrl/errors.hpp"

namespace llmrl::agents {

DqnAgent::DqnAgent(const mdp::EnvSpec& spec, AgentConfig config)
    : Agent(spec, std::move(config)),
      q_(network_sizes(spec_.state_dim, config_.hidden, spec_.action.dim()), nn::Activation::relu,
         nn::Activation::linear, rng_),
      target_(q_),
      optimizer_(q_, nn::AdamConfig{.learning_rate = config_.critic_lr}) {
    if (!spec_.action.is_discrete()) throw ConfigError("dqn requires a discrete action space");
}

Eigen::VectorXd DqnAgent::q_values(const Eigen::VectorXd& observation) const {
    check_observation(observation);
    return q_.forward(normalize(observation));
}

mdp::Action DqnAgent::select_action(const Eigen::VectorXd& observation, bool explore,
                                    const std::optional<mdp::ActionMask>& mask) {
    const Eigen::VectorXd q = q_values(observation);
    const int greedy = masked_argmax(q, mask);
    if (!explore) return mdp::Action::discrete(greedy);
    const double eps = std::min(1.0, config_.epsilon * exploration_);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (eps <= 0.0 || coin(rng_) >= eps) return mdp::Action::discrete(greedy);
    std::vector<int> allowed;
    for (int a = 0; a < spec_.action.count; ++a) {
        if (!mask || (*mask)[static_cast<std::size_t>(a)]) allowed.push_back(a);
    }
    std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
    return mdp::Action::discrete(allowed[pick(rng_)]);
}

LossSummary DqnAgent::train_step(const Replay& buffer) {
    if (buffer.size() < config_.batch_size) return {};
    const Batch batch = sample_batch(buffer, false);
    const Eigen::Index n = batch.rewards.size();

    const Eigen::MatrixXd next_q = target_.forward_batch(batch.next_states);
    const Eigen::RowVectorXd best_next = next_q.colwise().maxCoeff();
    const Eigen::RowVectorXd targets =
        batch.rewards + config_.gamma * batch.not_terminal.cwiseProduct(best_next);

    nn::ForwardContext ctx;
    const Eigen::MatrixXd q = q_.forward(batch.states, ctx);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto a = static_cast<Eigen::Index>(batch.indices[static_cast<std::size_t>(c)]);
        const double err = q(a, c) - targets[c];
        loss += 0.5 * err * err;
        grad(a, c) = err / static_cast<double>(n);
    }
    loss /= static_cast<double>(n);
    require_finite_loss(loss, "dqn critic", batch, critic_updates_);

    optimizer_.step(q_, q_.backward(ctx, grad));
    nn::polyak_update(target_, q_, config_.tau);
    ++critic_updates_;
    return LossSummary{TrainStatus::trained, loss, 0.0, false};
}

void DqnAgent::on_learning_rate_changed() {
    optimizer_.set_learning_rate(config_.critic_lr);
}

}  // namespace llmrl::agents
