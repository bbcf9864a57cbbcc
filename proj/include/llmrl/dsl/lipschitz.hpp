#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "llmrl/dsl/reward_expr.hpp"

namespace llmrl::dsl {

inline constexpr double kDefaultMinPairDistance = 1e-6;

struct LipschitzEstimate {
    double value = 0.0;
    std::size_t sample_count = 0;
    std::size_t admissible_pairs = 0;
    double min_distance = kDefaultMinPairDistance;
    // Pair attaining the maximal difference quotient, as coordinates in schema order.
    std::vector<double> first;
    std::vector<double> second;
};

/// Empirical Lipschitz constant of `expr` over a finite sample set:
///   max over pairs with ||s1 - s2||_2 >= min_distance of |R(s1) - R(s2)| / ||s1 - s2||_2.
/// Coordinates are the expression's schema features, in schema order (action features,
/// when present, are simply part of the schema). Throws EstimationError if fewer than two
/// samples or no admissible pair exists; EvaluationError propagates from the expression.
LipschitzEstimate estimate_lipschitz(const RewardExpr& expr, std::span<const Bindings> samples,
                                     double min_distance = kDefaultMinPairDistance);

}  // namespace llmrl::dsl
