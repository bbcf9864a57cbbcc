#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmrl/harness/runner.hpp"

namespace llmrl::harness {

struct ArmStats {
    std::vector<std::uint64_t> seeds;   // ascending
    std::vector<double> final_means;    // per seed, aligned with `seeds`
    double mean = 0.0;
    double std = 0.0;  // across seeds (population)
};

struct Comparison {
    std::string metric;
    bool lower_is_better = false;
    int window = 0;
    ArmStats a;
    ArmStats b;
    // Improvement of arm A over arm B as a fraction: (A - B) / |B|, sign flipped when lower
    // is better. Zero when both means are zero.
    double relative_improvement = 0.0;
    int wins = 0;    // seeds where A beats B
    int losses = 0;  // seeds where B beats A
    // Two-sided paired sign test; absent for a single seed.
    std::optional<double> p_value;

    nlohmann::json to_json() const;
};

/// Mean of the last `window` values of a metric series. Throws UsageError when the window
/// is zero or longer than the series.
double final_window_mean(const std::vector<double>& series, int window);

/// Two-sided sign test: probability under Binomial(wins + losses, 1/2) of a split at least
/// as uneven. 1 when there are no untied pairs.
double sign_test_p(int wins, int losses);

/// Compares two record sets seed by seed on the given metric. Requires the same seed set
/// in both arms (UsageError otherwise) and window <= episodes of every run.
Comparison summarize(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b, int window,
                     const std::string& metric, bool lower_is_better);

/// Per-seed table (arm, seed, final_mean) followed by per-arm means; plot-ready CSV.
void write_comparison_csv(const Comparison& c, const std::string& path);

/// Per-episode mean of the metric across seeds for both arms: episode, a_mean, b_mean.
void write_curve_csv(const std::vector<RunRecord>& a, const std::vector<RunRecord>& b, const std::string& metric,
                     const std::string& path);

}  // namespace llmrl::harness
