#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "llmrl/llm/gateway.hpp"

namespace llmrl::roles {

/// Numeric values found in a telemetry record. JSON records contribute every numeric leaf
/// (booleans excluded); other text contributes every token that parses as a number.
std::vector<double> telemetry_numbers(const std::string& telemetry);

/// Summary statistics in fixed order: mean, max, min, population std, median, count.
/// Truncated or zero-padded to `output_dim`; an empty record gives zeros.
Eigen::VectorXd summarize_telemetry(const std::string& telemetry, std::size_t output_dim);

/// Text-only state perception. With a backend the model must return {"features": [...]}
/// with exactly output_dim reals in [-1, 1]; an unusable reply after one re-prompt falls
/// back to summarize_telemetry. Without a backend the summary is used directly.
/// Throws UsageError when output_dim is zero.
Eigen::VectorXd perceive(llm::LlmBackend* backend, const std::string& telemetry, std::size_t output_dim,
                         llm::AuditLog* audit = nullptr);

}  // namespace llmrl::roles
