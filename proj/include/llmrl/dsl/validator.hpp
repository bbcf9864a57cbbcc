#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llmrl/dsl/reward_expr.hpp"

namespace llmrl::dsl {

enum class ViolationKind {
    unresolved,  // does not parse, or references features outside the schema
    non_finite,  // fails to produce a finite scalar on some probe
    misaligned,  // does not move in the task's direction with the aligned feature
};

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(ViolationKind kind) const;
};

/// Task-alignment heuristic: perturbing `feature` by +delta while holding every other
/// feature fixed must move the reward strictly in `direction` (-1: decreasing) on at
/// least `min_fraction` of the probes. Probe pairs whose evaluation fails are reported
/// by the finiteness check and excluded here.
struct AlignmentRule {
    std::string feature = "energy";
    int direction = -1;
    double min_fraction = 0.9;
    double delta = 1.0;
};

/// Runs the resolution, finiteness and alignment checks. Violations are data, never thrown.
/// The alignment check is skipped when `rule.feature` is not part of the schema.
ValidationReport validate(const RewardExpr& expr, const std::vector<std::string>& schema,
                          std::span<const Bindings> probes, const AlignmentRule& rule = {});

/// Parses first; a parse or resolution failure becomes an `unresolved` violation.
ValidationReport validate_source(std::string_view source, const std::vector<std::string>& schema,
                                 std::span<const Bindings> probes, const AlignmentRule& rule = {});

}  // namespace llmrl::dsl
