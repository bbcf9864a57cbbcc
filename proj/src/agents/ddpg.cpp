#include "llmrl/agents/ddpg.hpp"

#include <algorithm>
#include <cmath>

#include "llmrl/errors.hpp"

namespace llmrl::agents {
namespace {

void require_continuous(const mdp::EnvSpec& spec, const char* who) {
    if (spec.action.is_discrete()) throw ConfigError(std::string(who) + " requires a continuous action space");
}

Eigen::VectorXd gaussian_noise(Eigen::Index dim, double stddev, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd out(dim);
    for (Eigen::Index i = 0; i < dim; ++i) out[i] = stddev * normal(rng);
    return out;
}

// Half squared error against `targets`; returns the loss and fills the output gradient.
double mse(const Eigen::MatrixXd& q, const Eigen::RowVectorXd& targets, Eigen::MatrixXd& grad) {
    const Eigen::RowVectorXd err = q.row(0) - targets;
    const auto n = static_cast<double>(targets.size());
    grad = err / n;
    return 0.5 * err.squaredNorm() / n;
}

// Gradient of -mean Q(s, pi(s)) with respect to the actor output, through `critic`.
Eigen::MatrixXd policy_gradient(const nn::Mlp& critic, const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                double& actor_loss) {
    nn::ForwardContext ctx;
    const Eigen::MatrixXd q = critic.forward(stack_rows(states, actions), ctx);
    const auto n = static_cast<double>(states.cols());
    actor_loss = -q.mean();
    const Eigen::MatrixXd out_grad = Eigen::MatrixXd::Constant(1, states.cols(), -1.0 / n);
    const nn::Gradients g = critic.backward(ctx, out_grad);
    return g.input.bottomRows(actions.rows());
}

}  // namespace

DdpgAgent::DdpgAgent(const mdp::EnvSpec& spec, AgentConfig config)
    : Agent(spec, std::move(config)),
      actor_(network_sizes(spec_.state_dim, config_.hidden, spec_.action.dim()), nn::Activation::relu,
             nn::Activation::tanh, rng_),
      actor_target_(actor_),
      critic_(network_sizes(spec_.state_dim + spec_.action.dim(), config_.hidden, 1), nn::Activation::relu,
              nn::Activation::linear, rng_),
      critic_target_(critic_),
      actor_opt_(actor_, nn::AdamConfig{.learning_rate = config_.actor_lr}),
      critic_opt_(critic_, nn::AdamConfig{.learning_rate = config_.critic_lr}) {
    require_continuous(spec_, "ddpg");
}

mdp::Action DdpgAgent::select_action(const Eigen::VectorXd& observation, bool explore,
                                     const std::optional<mdp::ActionMask>&) {
    check_observation(observation);
    Eigen::VectorXd unit = actor_.forward(normalize(observation));
    const double stddev = config_.noise_scale * exploration_;
    if (explore && stddev > 0.0) {
        unit = (unit + gaussian_noise(unit.size(), stddev, rng_)).cwiseMax(-1.0).cwiseMin(1.0);
    }
    return mdp::Action::continuous(to_env_action(unit));
}

LossSummary DdpgAgent::train_step(const Replay& buffer) {
    if (buffer.size() < config_.batch_size) return {};
    const Batch batch = sample_batch(buffer, true);

    const Eigen::MatrixXd next_actions = actor_target_.forward_batch(batch.next_states);
    const Eigen::MatrixXd next_q = critic_target_.forward_batch(stack_rows(batch.next_states, next_actions));
    const Eigen::RowVectorXd targets =
        batch.rewards + config_.gamma * batch.not_terminal.cwiseProduct(next_q.row(0));

    nn::ForwardContext ctx;
    const Eigen::MatrixXd q = critic_.forward(stack_rows(batch.states, batch.actions), ctx);
    Eigen::MatrixXd grad;
    const double critic_loss = mse(q, targets, grad);
    require_finite_loss(critic_loss, "ddpg critic", batch, critic_updates_);
    critic_opt_.step(critic_, critic_.backward(ctx, grad));
    ++critic_updates_;

    nn::ForwardContext actor_ctx;
    const Eigen::MatrixXd actions = actor_.forward(batch.states, actor_ctx);
    double actor_loss = 0.0;
    const Eigen::MatrixXd action_grad = policy_gradient(critic_, batch.states, actions, actor_loss);
    require_finite_loss(actor_loss, "ddpg actor", batch, actor_updates_);
    actor_opt_.step(actor_, actor_.backward(actor_ctx, action_grad));
    ++actor_updates_;

    nn::polyak_update(critic_target_, critic_, config_.tau);
    nn::polyak_update(actor_target_, actor_, config_.tau);
    return LossSummary{TrainStatus::trained, critic_loss, actor_loss, true};
}

void DdpgAgent::on_learning_rate_changed() {
    actor_opt_.set_learning_rate(config_.actor_lr);
    critic_opt_.set_learning_rate(config_.critic_lr);
}

Td3Agent::Td3Agent(const mdp::EnvSpec& spec, AgentConfig config)
    : Agent(spec, std::move(config)),
      actor_(network_sizes(spec_.state_dim, config_.hidden, spec_.action.dim()), nn::Activation::relu,
             nn::Activation::tanh, rng_),
      actor_target_(actor_),
      critic1_(network_sizes(spec_.state_dim + spec_.action.dim(), config_.hidden, 1), nn::Activation::relu,
               nn::Activation::linear, rng_),
      critic1_target_(critic1_),
      critic2_(network_sizes(spec_.state_dim + spec_.action.dim(), config_.hidden, 1), nn::Activation::relu,
               nn::Activation::linear, rng_),
      critic2_target_(critic2_),
      actor_opt_(actor_, nn::AdamConfig{.learning_rate = config_.actor_lr}),
      critic1_opt_(critic1_, nn::AdamConfig{.learning_rate = config_.critic_lr}),
      critic2_opt_(critic2_, nn::AdamConfig{.learning_rate = config_.critic_lr}) {
    require_continuous(spec_, "td3");
}

mdp::Action Td3Agent::select_action(const Eigen::VectorXd& observation, bool explore,
                                    const std::optional<mdp::ActionMask>&) {
    check_observation(observation);
    Eigen::VectorXd unit = actor_.forward(normalize(observation));
    const double stddev = config_.noise_scale * exploration_;
    if (explore && stddev > 0.0) {
        unit = (unit + gaussian_noise(unit.size(), stddev, rng_)).cwiseMax(-1.0).cwiseMin(1.0);
    }
    return mdp::Action::continuous(to_env_action(unit));
}

LossSummary Td3Agent::train_step(const Replay& buffer) {
    if (buffer.size() < config_.batch_size) return {};
    const Batch batch = sample_batch(buffer, true);
    const Eigen::Index n = batch.rewards.size();

    Eigen::MatrixXd next_actions = actor_target_.forward_batch(batch.next_states);
    std::normal_distribution<double> normal(0.0, config_.target_noise);
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < next_actions.rows(); ++r) {
            const double eps = std::clamp(normal(rng_), -config_.target_noise_clip, config_.target_noise_clip);
            next_actions(r, c) = std::clamp(next_actions(r, c) + eps, -1.0, 1.0);
        }
    }
    const Eigen::MatrixXd next_input = stack_rows(batch.next_states, next_actions);
    const Eigen::RowVectorXd next_q =
        critic1_target_.forward_batch(next_input).row(0).cwiseMin(critic2_target_.forward_batch(next_input).row(0));
    const Eigen::RowVectorXd targets = batch.rewards + config_.gamma * batch.not_terminal.cwiseProduct(next_q);

    const Eigen::MatrixXd input = stack_rows(batch.states, batch.actions);
    nn::ForwardContext ctx1, ctx2;
    Eigen::MatrixXd grad1, grad2;
    const double loss1 = mse(critic1_.forward(input, ctx1), targets, grad1);
    const double loss2 = mse(critic2_.forward(input, ctx2), targets, grad2);
    require_finite_loss(loss1 + loss2, "td3 critic", batch, critic_updates_);
    critic1_opt_.step(critic1_, critic1_.backward(ctx1, grad1));
    critic2_opt_.step(critic2_, critic2_.backward(ctx2, grad2));
    ++critic_updates_;

    LossSummary summary{TrainStatus::trained, loss1 + loss2, 0.0, false};
    if (critic_updates_ % static_cast<std::size_t>(config_.policy_delay) != 0) return summary;

    nn::ForwardContext actor_ctx;
    const Eigen::MatrixXd actions = actor_.forward(batch.states, actor_ctx);
    const Eigen::MatrixXd action_grad = policy_gradient(critic1_, batch.states, actions, summary.actor_loss);
    require_finite_loss(summary.actor_loss, "td3 actor", batch, actor_updates_);
    actor_opt_.step(actor_, actor_.backward(actor_ctx, action_grad));
    ++actor_updates_;
    summary.actor_updated = true;

    nn::polyak_update(critic1_target_, critic1_, config_.tau);
    nn::polyak_update(critic2_target_, critic2_, config_.tau);
    nn::polyak_update(actor_target_, actor_, config_.tau);
    return summary;
}

bool Td3Agent::set_hyperparameter(const std::string& name, double value) {
    if (name == "policy_delay") {
        if (!(value >= 1.0)) throw ConfigError("policy_delay must be positive");
        config_.policy_delay = static_cast<int>(std::lround(value));
        return true;
    }
    return Agent::set_hyperparameter(name, value);
}

void Td3Agent::on_learning_rate_changed() {
    actor_opt_.set_learning_rate(config_.actor_lr);
    critic1_opt_.set_learning_rate(config_.critic_lr);
    critic2_opt_.set_learning_rate(config_.critic_lr);
}

}  // namespace llmrl::agents
