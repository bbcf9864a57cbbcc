#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "llmrl/nn/mlp.hpp"

namespace llmrl::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // Global-norm clip applied to the gradients before the moment update; <= 0 disables it.
    double clip_norm = 10.0;
};

/// Adaptive-moment optimizer with bias correction, bound to one network's shapes.
class Adam {
public:
    Adam() = default;
    Adam(const Mlp& net, AdamConfig config);

    /// Applies one update to `net`. Throws NumericError naming the parameter if any
    /// gradient is non-finite; the network is left untouched in that case.
    void step(Mlp& net, const Gradients& grads);

    std::int64_t step_count() const noexcept { return steps_; }
    double learning_rate() const noexcept { return config_.learning_rate; }
    void set_learning_rate(double lr);
    const AdamConfig& config() const noexcept { return config_; }

private:
    AdamConfig config_;
    std::int64_t steps_ = 0;
    std::vector<Eigen::MatrixXd> m_weight_, v_weight_;
    std::vector<Eigen::VectorXd> m_bias_, v_bias_;
};

}  // namespace llmrl::nn
