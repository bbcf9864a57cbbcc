#include "llmrl/dsl/lipschitz.hpp"

#include <cmath>

#include "llmrl/errors.hpp"

namespace llmrl::dsl {

LipschitzEstimate estimate_lipschitz(const RewardExpr& expr, std::span<const Bindings> samples,
                                     double min_distance) {
    if (samples.size() < 2) throw EstimationError("lipschitz estimate needs at least two samples");
    if (!(min_distance > 0.0)) throw EstimationError("minimum pair distance must be positive");

    const auto& schema = expr.schema();
    std::vector<std::vector<double>> points;
    std::vector<double> rewards;
    points.reserve(samples.size());
    rewards.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::vector<double> point;
        point.reserve(schema.size());
        for (const auto& name : schema) {
            auto it = samples[i].find(name);
            if (it == samples[i].end()) {
                throw EstimationError("sample " + std::to_string(i) + " lacks feature '" + name + "'");
            }
            point.push_back(it->second);
        }
        rewards.push_back(evaluate(expr, std::span<const double>(point)));
        points.push_back(std::move(point));
    }

    LipschitzEstimate est;
    est.sample_count = samples.size();
    est.min_distance = min_distance;
    bool found = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            double sq = 0.0;
            for (std::size_t d = 0; d < schema.size(); ++d) {
                const double diff = points[i][d] - points[j][d];
                sq += diff * diff;
            }
            const double dist = std::sqrt(sq);
            if (dist < min_distance) continue;
            ++est.admissible_pairs;
            const double quotient = std::abs(rewards[i] - rewards[j]) / dist;
            if (!found || quotient > est.value) {
                est.value = quotient;
                est.first = points[i];
                est.second = points[j];
                found = true;
            }
        }
    }
    if (!found) throw EstimationError("no sample pair is at least the minimum distance apart");
    return est;
}

}  // namespace llmrl::dsl
