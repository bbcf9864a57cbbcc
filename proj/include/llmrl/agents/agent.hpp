#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "llmrl/mdp/environment.hpp"
#include "llmrl/nn/replay_buffer.hpp"

namespace llmrl::agents {

using Rng = std::mt19937_64;
using Replay = nn::ReplayBuffer<mdp::Transition>;

struct AgentConfig {
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    double gamma = 0.99;
    double tau = 0.005;
    std::size_t batch_size = 64;
    std::size_t buffer_capacity = 100000;
    // Rewards are multiplied by this factor before entering any loss.
    double reward_scale = 1.0;
    // Gaussian action noise (DDPG/TD3, unit action scale).
    double noise_scale = 0.1;
    int policy_delay = 2;
    // Target policy smoothing (TD3).
    double target_noise = 0.2;
    double target_noise_clip = 0.5;
    // TQC.
    int n_critics = 2;
    int n_quantiles = 25;
    int k_drop_per_critic = 2;
    double entropy_alpha = 0.05;
    // Random-action probability (DQN epsilon-greedy, TQC uniform replacement).
    double epsilon = 0.1;
    std::vector<int> hidden = {64, 64};
    std::uint64_t seed = 0;

    /// Throws ConfigError when a field is out of range.
    void check() const;
};

enum class TrainStatus { trained, skipped };

struct LossSummary {
    TrainStatus status = TrainStatus::skipped;
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    bool actor_updated = false;
};

/// Transitions sampled from replay, one column per record, inputs already normalized.
struct Batch {
    Eigen::MatrixXd states;
    Eigen::MatrixXd actions;       // unit-scale continuous actions (continuous agents only)
    std::vector<std::int64_t> indices;  // discrete actions (DQN only)
    Eigen::RowVectorXd rewards;
    Eigen::MatrixXd next_states;
    Eigen::RowVectorXd not_terminal;  // 0 for true terminal states, 1 otherwise (incl. truncation)
};

class Agent {
public:
    Agent(const mdp::EnvSpec& spec, AgentConfig config);
    virtual ~Agent() = default;

    virtual std::string name() const = 0;

    /// With explore=false the choice is deterministic. For discrete agents masked entries
    /// are never chosen; continuous agents pass the mask through to the hybrid decoder.
    /// Throws ContractError for an all-false mask or a wrong observation size.
    virtual mdp::Action select_action(const Eigen::VectorXd& observation, bool explore,
                                      const std::optional<mdp::ActionMask>& mask = std::nullopt) = 0;

    /// One gradient update from `buffer`; returns status skipped while the buffer holds
    /// fewer than batch_size records. Throws NumericError on a non-finite loss.
    virtual LossSummary train_step(const Replay& buffer) = 0;

    /// Exploration multiplier (default 1). DQN: epsilon-greedy probability is
    /// epsilon * value. DDPG/TD3: Gaussian noise stddev is noise_scale * value. TQC: a
    /// uniform random action replaces the policy sample with probability epsilon * value.
    void set_exploration(double value);
    double exploration() const noexcept { return exploration_; }

    /// Guided hyperparameters; returns false for names this agent does not use.
    virtual bool set_hyperparameter(const std::string& name, double value);

    const AgentConfig& config() const noexcept { return config_; }
    const mdp::EnvSpec& spec() const noexcept { return spec_; }

    Eigen::VectorXd normalize(const Eigen::VectorXd& observation) const;

    std::size_t critic_updates() const noexcept { return critic_updates_; }
    std::size_t actor_updates() const noexcept { return actor_updates_; }

protected:
    Batch sample_batch(const Replay& buffer, bool continuous);
    void check_observation(const Eigen::VectorXd& observation) const;

    /// Unit cube [-1, 1]^d <-> environment action bounds.
    Eigen::VectorXd to_env_action(const Eigen::VectorXd& unit) const;
    Eigen::VectorXd to_unit_action(const Eigen::VectorXd& env_action) const;

    virtual void on_learning_rate_changed() {}

    mdp::EnvSpec spec_;
    AgentConfig config_;
    Rng rng_;
    Eigen::VectorXd inv_scale_;
    double exploration_ = 1.0;
    std::size_t critic_updates_ = 0;
    std::size_t actor_updates_ = 0;
};

/// Layer sizes {in, hidden..., out} for an agent network.
std::vector<int> network_sizes(std::size_t in, const std::vector<int>& hidden, std::size_t out);

/// Vertically stacks state and action columns into critic inputs.
Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom);

/// Throws NumericError with a short snapshot of the batch when `loss` is not finite.
void require_finite_loss(double loss, const char* what, const Batch& batch, std::size_t update);

/// Pools the quantiles of all critics, sorts them, drops the k * N largest and returns
/// the mean of the rest. Throws ConfigError unless 0 <= k < M for every critic of size M.
double tqc_truncated_target(std::span<const Eigen::VectorXd> quantile_sets, int k);

/// Decoded hybrid action: the first `n_choices` unit entries are choice logits (masked
/// argmax), the remainder are allocation logits normalized by softmax into fractions.
struct HybridDecision {
    int choice = 0;
    std::vector<double> fractions;
};

HybridDecision decode_hybrid_action(const Eigen::VectorXd& logits, int n_choices, const mdp::ActionMask& mask);

/// Index of the largest value among unmasked entries (lowest index on ties).
int masked_argmax(const Eigen::VectorXd& values, const std::optional<mdp::ActionMask>& mask);

}  // namespace llmrl::agents
