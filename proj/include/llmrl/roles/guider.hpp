#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmrl/llm/gateway.hpp"
#include "llmrl/roles/jsonl.hpp"

namespace llmrl::roles {

struct Hyperparameter {
    std::string name;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    // Real-valued entries move at most by this factor per intervention (value / f .. value * f).
    double max_factor = 2.0;
    // Integer entries move at most this many units per intervention.
    bool integer = false;
    double max_step = 1.0;

    bool operator==(const Hyperparameter&) const = default;
};

/// Whitelisted hyperparameters with certified ranges. Every value stays inside its range.
class HyperparamSet {
public:
    HyperparamSet() = default;

    /// Throws ConfigError for a duplicate name, an empty range, a value outside the range,
    /// a non-positive range for a real entry, or a non-integral value for an integer entry.
    void add(Hyperparameter entry);

    bool contains(const std::string& name) const;
    const Hyperparameter& at(const std::string& name) const;
    double value(const std::string& name) const;
    const std::vector<Hyperparameter>& entries() const noexcept { return entries_; }

    /// Value the proposal would become: clamped into the certified range, then limited to
    /// one rate step from the current value. Does not modify the set.
    double admissible(const std::string& name, double proposed) const;

    /// Sets a value that must already be admissible-range (ConfigError otherwise).
    void set(const std::string& name, double value);

    nlohmann::json to_json() const;
    /// "name = value (range [lo, hi])" per line, for prompts.
    std::string describe() const;

    bool operator==(const HyperparamSet&) const = default;

private:
    std::vector<Hyperparameter> entries_;
};

/// Default whitelist for an algorithm (learning_rate, tau, batch_size, exploration_decay,
/// plus entropy_alpha and truncation_k for TQC) centred on the given starting values.
HyperparamSet default_hyperparameters(const std::string& algorithm, double learning_rate, double tau,
                                      double batch_size, double exploration_decay, double entropy_alpha = 0.05,
                                      double truncation_k = 2.0);

struct GuidanceReport {
    std::vector<double> recent_returns;  // last W episode returns, oldest first
    double actor_loss_mean = 0.0;
    double actor_loss_last = 0.0;
    double critic_loss_mean = 0.0;
    double critic_loss_last = 0.0;
    std::string exploration_name = "epsilon";
    double exploration = 0.0;
    double progress = 0.0;  // current episode / total episodes
    HyperparamSet theta;
    // Set on the first report after a rollback.
    std::string rollback_notice;

    /// Throws UsageError for an empty window or progress outside [0, 1].
    void check() const;
};

struct Adjustment {
    std::string name;
    double proposed = 0.0;
    double applied = 0.0;
    std::string rationale;
};

struct GuidanceDirective {
    std::vector<Adjustment> adjustments;
    std::vector<std::string> dropped;  // proposals naming non-whitelisted or repeated parameters
    bool rollback = false;
    // The model reply was unusable; nothing was applied this interval.
    bool unguided = false;

    nlohmann::json to_json() const;
};

/// Renders the guider prompt (temperature 0), parses {adjustments: [{name, new_value,
/// rationale}]}, drops non-whitelisted names and clamps and rate-limits the rest relative
/// to report.theta. An unusable reply after one re-prompt yields an empty, unguided
/// directive. Backend failures propagate.
GuidanceDirective guide(llm::LlmBackend& backend, const GuidanceReport& report, llm::AuditLog* audit = nullptr);

struct RollbackDecision {
    bool rollback = false;
    std::size_t best_window = 0;  // index of the best prior window
    double threshold = 0.0;
};

/// Compares the last window mean against the best earlier one. Rolls back when the current
/// mean falls below best - tolerance * |best| (equal to (1 - tolerance) * best for positive
/// returns). A tolerance of 1 or more never rolls back. Throws UsageError with fewer than
/// two windows or a negative tolerance.
RollbackDecision check_rollback(std::span<const double> window_means, double tolerance);

struct GuidanceSettings {
    int interval = 10;  // episodes between interventions
    int window = 10;    // episodes per reward window
    double tolerance = 0.15;

    void check() const;
};

/// Drives periodic guidance during training: collects per-episode statistics, calls the
/// guider every `interval` episodes, enforces rollback and keeps the current hyperparameters.
class GuidanceSupervisor {
public:
    GuidanceSupervisor(llm::LlmBackend& backend, HyperparamSet initial, GuidanceSettings settings,
                       llm::AuditLog* audit = nullptr, JsonlWriter* ledger = nullptr);

    /// Records one finished episode (0-based index). Returns a directive when this episode
    /// closes an intervention interval; theta() then holds the values to apply.
    std::optional<GuidanceDirective> end_episode(int episode, int total_episodes, double episode_return,
                                                 double actor_loss, double critic_loss,
                                                 const std::string& exploration_name, double exploration);

    const HyperparamSet& theta() const noexcept { return theta_; }
    const std::vector<double>& window_means() const noexcept { return window_means_; }
    std::size_t interventions() const noexcept { return interventions_; }

private:
    llm::LlmBackend& backend_;
    HyperparamSet theta_;
    GuidanceSettings settings_;
    llm::AuditLog* audit_;
    JsonlWriter* ledger_;
    std::vector<double> returns_;
    std::vector<double> actor_losses_;
    std::vector<double> critic_losses_;
    std::vector<double> window_means_;
    std::vector<HyperparamSet> window_theta_;  // theta in force during each window
    HyperparamSet window_start_theta_;
    std::string pending_notice_;
    std::size_t interventions_ = 0;
};

}  // namespace llmrl::roles
