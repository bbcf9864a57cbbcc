#include "llmrl/agents/tqc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "llmrl/errors.hpp"

namespace llmrl::agents {
namespace {

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;
constexpr double kSquashEps = 1e-6;

}  // namespace

TqcAgent::TqcAgent(const mdp::EnvSpec& spec, AgentConfig config)
    : Agent(spec, std::move(config)),
      actor_(network_sizes(spec_.state_dim, config_.hidden, 2 * spec_.action.dim()), nn::Activation::relu,
             nn::Activation::linear, rng_) {
    if (spec_.action.is_discrete()) throw ConfigError("tqc requires a continuous action space");
    const auto critic_sizes = network_sizes(spec_.state_dim + spec_.action.dim(), config_.hidden,
                                            static_cast<std::size_t>(config_.n_quantiles));
    for (int i = 0; i < config_.n_critics; ++i) {
        critics_.emplace_back(critic_sizes, nn::Activation::relu, nn::Activation::linear, rng_);
        critic_targets_.push_back(critics_.back());
        critic_opts_.emplace_back(critics_.back(), nn::AdamConfig{.learning_rate = config_.critic_lr});
    }
    actor_opt_ = nn::Adam(actor_, nn::AdamConfig{.learning_rate = config_.actor_lr});
    taus_.resize(config_.n_quantiles);
    for (int i = 0; i < config_.n_quantiles; ++i) taus_[i] = (2.0 * i + 1.0) / (2.0 * config_.n_quantiles);
}

TqcAgent::PolicySample TqcAgent::sample_policy(const Eigen::MatrixXd& actor_output) {
    const Eigen::Index d = static_cast<Eigen::Index>(spec_.action.dim());
    const Eigen::Index n = actor_output.cols();
    PolicySample s;
    s.mean = actor_output.topRows(d);
    const Eigen::MatrixXd raw = actor_output.bottomRows(d);
    s.log_std = raw.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
    s.clamp_mask = ((raw.array() >= kLogStdMin) && (raw.array() <= kLogStdMax)).cast<double>();
    s.noise.resize(d, n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index r = 0; r < d; ++r) s.noise(r, c) = normal(rng_);
    }
    const Eigen::ArrayXXd pre = s.mean.array() + s.log_std.array().exp() * s.noise.array();
    s.action = pre.tanh().matrix();
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    const Eigen::ArrayXXd per_dim = -0.5 * s.noise.array().square() - s.log_std.array() - half_log_2pi -
                                    (1.0 - s.action.array().square() + kSquashEps).log();
    s.log_prob = per_dim.colwise().sum().matrix();
    return s;
}

mdp::Action TqcAgent::select_action(const Eigen::VectorXd& observation, bool explore,
                                    const std::optional<mdp::ActionMask>&) {
    check_observation(observation);
    const Eigen::Index d = static_cast<Eigen::Index>(spec_.action.dim());
    const Eigen::VectorXd out = actor_.forward(normalize(observation));
    if (!explore) return mdp::Action::continuous(to_env_action(out.head(d).array().tanh().matrix()));
    const double eps = std::min(1.0, config_.epsilon * exploration_);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (eps > 0.0 && coin(rng_) < eps) {
        std::uniform_real_distribution<double> uniform(-1.0, 1.0);
        Eigen::VectorXd unit(d);
        for (Eigen::Index i = 0; i < d; ++i) unit[i] = uniform(rng_);
        return mdp::Action::continuous(to_env_action(unit));
    }
    const PolicySample s = sample_policy(out);
    return mdp::Action::continuous(to_env_action(s.action.col(0)));
}

double TqcAgent::q_value(const Eigen::VectorXd& observation, const Eigen::VectorXd& env_action) const {
    check_observation(observation);
    Eigen::VectorXd input(observation.size() + env_action.size());
    input << normalize(observation), to_unit_action(env_action);
    double total = 0.0;
    for (const auto& critic : critics_) total += critic.forward(input).mean();
    return total / static_cast<double>(critics_.size());
}

LossSummary TqcAgent::train_step(const Replay& buffer) {
    if (buffer.size() < config_.batch_size) return {};
    const Batch batch = sample_batch(buffer, true);
    const Eigen::Index n = batch.rewards.size();
    const Eigen::Index m = config_.n_quantiles;
    const auto n_critics = static_cast<Eigen::Index>(critics_.size());
    const double alpha = config_.entropy_alpha;

    // Truncated distributional targets, one row of atoms per sample.
    const PolicySample next = sample_policy(actor_.forward_batch(batch.next_states));
    const Eigen::MatrixXd next_input = stack_rows(batch.next_states, next.action);
    std::vector<Eigen::MatrixXd> next_z;
    for (const auto& target : critic_targets_) next_z.push_back(target.forward_batch(next_input));
    const Eigen::Index pooled = n_critics * m;
    const Eigen::Index kept = pooled - static_cast<Eigen::Index>(config_.k_drop_per_critic) * n_critics;
    if (kept <= 0) throw ConfigError("truncation drops every quantile");
    Eigen::MatrixXd atoms(kept, n);
    std::vector<double> pool(static_cast<std::size_t>(pooled));
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index k = 0; k < n_critics; ++k) {
            for (Eigen::Index i = 0; i < m; ++i) pool[static_cast<std::size_t>(k * m + i)] = next_z[k](i, c);
        }
        std::sort(pool.begin(), pool.end());
        for (Eigen::Index j = 0; j < kept; ++j) {
            atoms(j, c) = batch.rewards[c] + config_.gamma * batch.not_terminal[c] *
                                                 (pool[static_cast<std::size_t>(j)] - alpha * next.log_prob[c]);
        }
    }

    // Quantile Huber loss (kappa = 1) for every critic.
    const Eigen::MatrixXd input = stack_rows(batch.states, batch.actions);
    const double norm = 1.0 / static_cast<double>(n * m * kept);
    double critic_loss = 0.0;
    std::vector<nn::Gradients> critic_grads;
    for (Eigen::Index k = 0; k < n_critics; ++k) {
        nn::ForwardContext ctx;
        const Eigen::MatrixXd theta = critics_[k].forward(input, ctx);
        Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(m, n);
        double loss = 0.0;
        for (Eigen::Index c = 0; c < n; ++c) {
            for (Eigen::Index i = 0; i < m; ++i) {
                double g = 0.0;
                for (Eigen::Index j = 0; j < kept; ++j) {
                    const double u = atoms(j, c) - theta(i, c);
                    const double w = std::abs(taus_[i] - (u < 0.0 ? 1.0 : 0.0));
                    const double au = std::abs(u);
                    loss += w * (au <= 1.0 ? 0.5 * u * u : au - 0.5);
                    g -= w * std::clamp(u, -1.0, 1.0);
                }
                grad(i, c) = g * norm;
            }
        }
        critic_loss += loss * norm;
        critic_grads.push_back(critics_[k].backward(ctx, grad));
    }
    require_finite_loss(critic_loss, "tqc critic", batch, critic_updates_);
    for (Eigen::Index k = 0; k < n_critics; ++k) critic_opts_[k].step(critics_[k], critic_grads[k]);
    ++critic_updates_;

    // Actor: minimize mean(alpha * log pi - mean quantile) with reparameterized samples.
    nn::ForwardContext actor_ctx;
    const Eigen::MatrixXd out = actor_.forward(batch.states, actor_ctx);
    const PolicySample s = sample_policy(out);
    const Eigen::MatrixXd policy_input = stack_rows(batch.states, s.action);
    const Eigen::Index d = s.action.rows();
    Eigen::MatrixXd dq_da = Eigen::MatrixXd::Zero(d, n);
    double q_mean = 0.0;
    const Eigen::MatrixXd quantile_grad = Eigen::MatrixXd::Constant(m, n, 1.0 / static_cast<double>(n_critics * m));
    for (const auto& critic : critics_) {
        nn::ForwardContext ctx;
        q_mean += critic.forward(policy_input, ctx).sum();
        dq_da += critic.backward(ctx, quantile_grad).input.bottomRows(d);
    }
    q_mean /= static_cast<double>(n_critics * m * n);
    const double actor_loss = alpha * s.log_prob.mean() - q_mean;
    require_finite_loss(actor_loss, "tqc actor", batch, actor_updates_);

    const Eigen::ArrayXXd a = s.action.array();
    const Eigen::ArrayXXd one_minus = 1.0 - a.square();
    const Eigen::ArrayXXd sigma_xi = s.log_std.array().exp() * s.noise.array();
    const Eigen::ArrayXXd dlogp_dpre = 2.0 * a * one_minus / (one_minus + kSquashEps);
    const Eigen::ArrayXXd dq_dpre = dq_da.array() * one_minus;
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd actor_grad(2 * d, n);
    actor_grad.topRows(d) = (inv_n * (alpha * dlogp_dpre - dq_dpre)).matrix();
    actor_grad.bottomRows(d) =
        (inv_n * (alpha * (-1.0 + dlogp_dpre * sigma_xi) - dq_dpre * sigma_xi) * s.clamp_mask.array()).matrix();
    actor_opt_.step(actor_, actor_.backward(actor_ctx, actor_grad));
    ++actor_updates_;

    for (Eigen::Index k = 0; k < n_critics; ++k) nn::polyak_update(critic_targets_[k], critics_[k], config_.tau);
    return LossSummary{TrainStatus::trained, critic_loss, actor_loss, true};
}

bool TqcAgent::set_hyperparameter(const std::string& name, double value) {
    if (name == "entropy_alpha") {
        if (!(value >= 0.0)) throw ConfigError("entropy_alpha must be non-negative");
        config_.entropy_alpha = value;
        return true;
    }
    if (name == "truncation_k") {
        const long k = std::lround(value);
        if (k < 0 || k >= config_.n_quantiles) throw ConfigError("truncation_k must satisfy 0 <= k < n_quantiles");
        config_.k_drop_per_critic = static_cast<int>(k);
        return true;
    }
    return Agent::set_hyperparameter(name, value);
}

void TqcAgent::on_learning_rate_changed() {
    actor_opt_.set_learning_rate(config_.actor_lr);
    for (auto& opt : critic_opts_) opt.set_learning_rate(config_.critic_lr);
}

}  // namespace llmrl::agents
