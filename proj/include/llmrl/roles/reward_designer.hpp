#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmrl/dsl/lipschitz.hpp"
#include "llmrl/dsl/reward_expr.hpp"
#include "llmrl/dsl/validator.hpp"
#include "llmrl/llm/gateway.hpp"
#include "llmrl/roles/jsonl.hpp"

namespace llmrl::roles {

/// What the reward designer is told about the task.
struct RewardTask {
    std::string description;
    // State features the expression may reference, in schema order.
    std::vector<std::string> features;
    // Optional one-line meaning per feature, aligned with `features` (may be empty).
    std::vector<std::string> feature_docs;
    // Named constants (reward weights); bound on every probe.
    dsl::Bindings constants;
    std::vector<std::string> constraints;
    dsl::AlignmentRule alignment;
    double temperature = 0.7;

    /// features followed by constant names: the schema expressions are parsed against.
    std::vector<std::string> expression_schema() const;
    void check() const;
};

struct RewardCandidate {
    std::size_t index = 0;  // generation order, 0-based
    std::string source;
    std::string explanation;
    std::optional<dsl::RewardExpr> expr;
    dsl::ValidationReport validation;
    std::optional<dsl::LipschitzEstimate> lipschitz;
    // Why the candidate could not be assessed at all: an unusable model reply, or no
    // admissible probe pair for the Lipschitz estimate. Empty otherwise.
    std::string error;

    /// Validation passed and a Lipschitz estimate exists.
    bool selectable() const noexcept { return validation.ok() && lipschitz.has_value() && error.empty(); }
    std::vector<std::string> violation_messages() const;
    nlohmann::json to_json() const;
};

struct DesignResult {
    RewardCandidate selected;
    std::vector<RewardCandidate> candidates;  // every candidate in generation order
};

/// Validates a candidate expression against the probes and, when it passes, estimates its
/// Lipschitz constant over them. The probes need only bind the task's features.
RewardCandidate assess_candidate(std::size_t index, const std::string& source, const std::string& explanation,
                                 const RewardTask& task, std::span<const dsl::Bindings> probes);

/// Index of the selectable candidate with the smallest Lipschitz estimate; ties go to the
/// smaller AST, then to the earlier candidate. Throws DesignError when none is selectable.
std::size_t select_candidate(std::span<const RewardCandidate> candidates);

/// Asks the backend for `n_candidates` reward functions ({explanation, reward_expression}),
/// assesses each and returns the selected one with the full candidate list. Each candidate
/// is appended to `ledger` when given.
DesignResult design_reward(llm::LlmBackend& backend, const RewardTask& task, int n_candidates,
                           std::span<const dsl::Bindings> probes, llm::AuditLog* audit = nullptr,
                           JsonlWriter* ledger = nullptr);

struct FeatureRange {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
};

struct ProbeSet {
    std::vector<dsl::Bindings> samples;
    std::size_t from_model = 0;
    std::size_t from_grid = 0;
    std::size_t dropped = 0;  // model samples rejected for missing keys or range violations
};

/// Deterministic low-discrepancy points: the first coordinate runs evenly from lo to hi
/// (endpoints included), the others follow radical inverses in successive prime bases
/// (a Hammersley set). A single point sits at the centre of the box.
std::vector<dsl::Bindings> low_discrepancy_grid(std::span<const FeatureRange> ranges, std::size_t count);

/// Synthetic probe states. With a backend the model is asked for `count` samples; samples
/// missing a feature or outside a range are dropped, and the set is always topped up to
/// `count` from the grid. Without a backend (or when the model reply is unusable) the
/// grid supplies every sample. Throws UsageError when count < 2 or ranges are invalid.
ProbeSet generate_probe_samples(llm::LlmBackend* backend, const std::string& task_description,
                                std::span<const FeatureRange> ranges, std::size_t count,
                                llm::AuditLog* audit = nullptr);

}  // namespace llmrl::roles
