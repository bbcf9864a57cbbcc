#include "llmrl/agents/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llmrl/errors.hpp"

namespace llmrl::agents {

void AgentConfig::check() const {
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (buffer_capacity == 0) throw ConfigError("buffer_capacity must be positive");
    if (!(reward_scale > 0.0)) throw ConfigError("reward_scale must be positive");
    if (!(noise_scale >= 0.0)) throw ConfigError("noise_scale must be non-negative");
    if (policy_delay <= 0) throw ConfigError("policy_delay must be positive");
    if (n_critics <= 0 || n_quantiles <= 0) throw ConfigError("n_critics and n_quantiles must be positive");
    if (k_drop_per_critic < 0 || k_drop_per_critic >= n_quantiles) {
        throw ConfigError("k_drop_per_critic must satisfy 0 <= k < n_quantiles");
    }
    if (!(entropy_alpha >= 0.0)) throw ConfigError("entropy_alpha must be non-negative");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    for (int h : hidden) {
        if (h <= 0) throw ConfigError("hidden layer sizes must be positive");
    }
}

Agent::Agent(const mdp::EnvSpec& spec, AgentConfig config) : spec_(spec), config_(std::move(config)), rng_(config_.seed) {
    spec_.check();
    config_.check();
    inv_scale_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec_.state_dim));
    if (spec_.feature_scales.size() != 0) inv_scale_ = spec_.feature_scales.cwiseInverse();
}

void Agent::set_exploration(double value) {
    if (!(value >= 0.0)) throw ConfigError("exploration value must be non-negative");
    exploration_ = value;
}

bool Agent::set_hyperparameter(const std::string& name, double value) {
    if (name == "learning_rate") {
        if (!(value > 0.0)) throw ConfigError("learning_rate must be positive");
        config_.actor_lr = value;
        config_.critic_lr = value;
        on_learning_rate_changed();
        return true;
    }
    if (name == "tau") {
        if (!(value > 0.0 && value <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
        config_.tau = value;
        return true;
    }
    if (name == "batch_size") {
        if (!(value >= 1.0)) throw ConfigError("batch_size must be positive");
        config_.batch_size = static_cast<std::size_t>(std::llround(value));
        return true;
    }
    return false;
}

Eigen::VectorXd Agent::normalize(const Eigen::VectorXd& observation) const {
    return observation.cwiseProduct(inv_scale_);
}

void Agent::check_observation(const Eigen::VectorXd& observation) const {
    if (static_cast<std::size_t>(observation.size()) != spec_.state_dim) {
        throw ContractError("observation has " + std::to_string(observation.size()) + " entries, expected " +
                            std::to_string(spec_.state_dim));
    }
}

Eigen::VectorXd Agent::to_env_action(const Eigen::VectorXd& unit) const {
    const auto& low = spec_.action.low;
    const auto& high = spec_.action.high;
    Eigen::VectorXd out = low + 0.5 * (unit.array() + 1.0).matrix().cwiseProduct(high - low);
    return out.cwiseMax(low).cwiseMin(high);
}

Eigen::VectorXd Agent::to_unit_action(const Eigen::VectorXd& env_action) const {
    const auto& low = spec_.action.low;
    const auto& high = spec_.action.high;
    return (2.0 * (env_action - low).cwiseQuotient(high - low)).array() - 1.0;
}

Batch Agent::sample_batch(const Replay& buffer, bool continuous) {
    const std::size_t n = config_.batch_size;
    const auto picks = buffer.sample(n, rng_);
    const auto dim = static_cast<Eigen::Index>(spec_.state_dim);
    const auto cols = static_cast<Eigen::Index>(n);
    Batch batch;
    batch.states.resize(dim, cols);
    batch.next_states.resize(dim, cols);
    batch.rewards.resize(cols);
    batch.not_terminal.resize(cols);
    if (continuous) {
        batch.actions.resize(static_cast<Eigen::Index>(spec_.action.dim()), cols);
    } else {
        batch.indices.resize(n);
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
        const mdp::Transition& t = *picks[static_cast<std::size_t>(c)];
        batch.states.col(c) = t.state.cwiseProduct(inv_scale_);
        batch.next_states.col(c) = t.next_state.cwiseProduct(inv_scale_);
        batch.rewards[c] = config_.reward_scale * t.reward;
        batch.not_terminal[c] = (t.done && !t.truncated) ? 0.0 : 1.0;
        if (continuous) {
            batch.actions.col(c) = to_unit_action(t.action.values());
        } else {
            batch.indices[static_cast<std::size_t>(c)] = t.action.index();
        }
    }
    return batch;
}

std::vector<int> network_sizes(std::size_t in, const std::vector<int>& hidden, std::size_t out) {
    std::vector<int> sizes{static_cast<int>(in)};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(static_cast<int>(out));
    return sizes;
}

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
    if (top.cols() != bottom.cols()) throw ShapeError("stack_rows needs equal column counts");
    Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

void require_finite_loss(double loss, const char* what, const Batch& batch, std::size_t update) {
    if (std::isfinite(loss)) return;
    std::string snapshot = std::string(what) + " loss is not finite at update " + std::to_string(update);
    snapshot += "; batch of " + std::to_string(batch.rewards.size());
    if (batch.rewards.size() > 0) {
        snapshot += ", reward range [" + std::to_string(batch.rewards.minCoeff()) + ", " +
                    std::to_string(batch.rewards.maxCoeff()) + "]";
    }
    snapshot += batch.states.allFinite() ? ", states finite" : ", states contain non-finite values";
    throw NumericError(snapshot);
}

double tqc_truncated_target(std::span<const Eigen::VectorXd> quantile_sets, int k) {
    if (quantile_sets.empty()) throw ConfigError("need at least one quantile set");
    const Eigen::Index m = quantile_sets.front().size();
    if (m == 0) throw ConfigError("quantile sets must be non-empty");
    for (const auto& q : quantile_sets) {
        if (q.size() != m) throw ConfigError("all quantile sets must have the same length");
    }
    const auto n = static_cast<Eigen::Index>(quantile_sets.size());
    if (k < 0 || static_cast<Eigen::Index>(k) * n >= n * m) {
        throw ConfigError("truncation drops every quantile (k * N >= N * M)");
    }
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(n * m));
    for (const auto& q : quantile_sets) pooled.insert(pooled.end(), q.data(), q.data() + q.size());
    std::sort(pooled.begin(), pooled.end());
    const std::size_t keep = pooled.size() - static_cast<std::size_t>(k) * static_cast<std::size_t>(n);
    return std::accumulate(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(keep), 0.0) /
           static_cast<double>(keep);
}

int masked_argmax(const Eigen::VectorXd& values, const std::optional<mdp::ActionMask>& mask) {
    if (mask && static_cast<Eigen::Index>(mask->size()) != values.size()) {
        throw ContractError("mask length does not match the number of choices");
    }
    int best = -1;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (mask && !(*mask)[static_cast<std::size_t>(i)]) continue;
        if (best < 0 || values[i] > values[best]) best = static_cast<int>(i);
    }
    if (best < 0) throw ContractError("action mask excludes every choice");
    return best;
}

HybridDecision decode_hybrid_action(const Eigen::VectorXd& logits, int n_choices, const mdp::ActionMask& mask) {
    if (n_choices <= 0 || logits.size() <= n_choices) {
        throw ShapeError("hybrid action needs choice logits followed by at least one allocation logit");
    }
    HybridDecision decision;
    decision.choice = masked_argmax(logits.head(n_choices), mask);
    const Eigen::VectorXd alloc = logits.tail(logits.size() - n_choices);
    const double peak = alloc.maxCoeff();
    double total = 0.0;
    decision.fractions.resize(static_cast<std::size_t>(alloc.size()));
    for (Eigen::Index i = 0; i < alloc.size(); ++i) {
        decision.fractions[static_cast<std::size_t>(i)] = std::exp(alloc[i] - peak);
        total += decision.fractions[static_cast<std::size_t>(i)];
    }
    for (auto& f : decision.fractions) f /= total;
    return decision;
}

}  // namespace llmrl::agents
