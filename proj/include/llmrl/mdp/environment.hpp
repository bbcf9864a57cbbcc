#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace llmrl::mdp {

/// Either a discrete cardinality or per-dimension continuous bounds.
struct ActionSpace {
    static ActionSpace discrete(int count);
    static ActionSpace continuous(Eigen::VectorXd low, Eigen::VectorXd high);

    bool is_discrete() const noexcept { return count > 0; }
    /// Number of discrete choices, or the continuous dimension.
    std::size_t dim() const noexcept { return is_discrete() ? static_cast<std::size_t>(count) : low.size(); }

    int count = 0;
    Eigen::VectorXd low;
    Eigen::VectorXd high;
};

struct EnvSpec {
    std::size_t state_dim = 0;
    ActionSpace action;
    double gamma = 0.99;
    int max_steps_per_episode = 1;
    std::vector<std::string> feature_names;
    // Positive divisor per state coordinate, used by agents to normalize their inputs.
    // Empty means all ones.
    Eigen::VectorXd feature_scales;

    /// Throws ConfigError if any invariant fails.
    void check() const;
    std::optional<std::size_t> feature_index(const std::string& name) const;
};

using ActionMask = std::vector<bool>;

class Action {
public:
    Action() = default;
    static Action discrete(std::int64_t index) { return Action(index); }
    static Action continuous(Eigen::VectorXd values) { return Action(std::move(values)); }

    bool is_discrete() const noexcept { return std::holds_alternative<std::int64_t>(value_); }
    std::int64_t index() const;
    const Eigen::VectorXd& values() const;

    friend bool operator==(const Action& a, const Action& b);

private:
    explicit Action(std::int64_t index) : value_(index) {}
    explicit Action(Eigen::VectorXd values) : value_(std::move(values)) {}

    std::variant<std::int64_t, Eigen::VectorXd> value_{std::int64_t{0}};
};

struct Transition {
    Eigen::VectorXd state;
    Action action;
    double reward = 0.0;
    Eigen::VectorXd next_state;
    bool done = false;
    // done was caused by the step limit, not a terminal state; learners keep bootstrapping.
    bool truncated = false;
    int step_index = 0;
};

struct StepResult {
    Eigen::VectorXd observation;
    double reward = 0.0;
    bool done = false;
    bool truncated = false;
};

/// Base for environment state machines. The public reset/step enforce the shared
/// contract (bounds checks, step-after-done, step limit) around the subclass hooks.
class Environment {
public:
    virtual ~Environment() = default;

    virtual const EnvSpec& spec() const = 0;

    /// Deterministic for a given seed; zeroes the step clock.
    Eigen::VectorXd reset(std::uint64_t seed);

    /// Throws ContractError for an action outside the EnvSpec bounds (never clipped here)
    /// and UsageError when called before reset or after done.
    StepResult step(const Action& action);

    /// Feasible discrete choices for the current state, if the environment restricts them.
    virtual std::optional<ActionMask> action_mask() const { return std::nullopt; }

    int steps_taken() const noexcept { return steps_; }
    bool episode_done() const noexcept { return done_; }

protected:
    virtual Eigen::VectorXd do_reset(std::uint64_t seed) = 0;
    /// `done` in the result reports a terminal state; the base adds step-limit truncation.
    virtual StepResult do_step(const Action& action) = 0;

private:
    int steps_ = 0;
    bool started_ = false;
    bool done_ = false;
};

/// Throws ContractError if `action` does not fit `space`.
void check_action(const ActionSpace& space, const Action& action);

}  // namespace llmrl::mdp
