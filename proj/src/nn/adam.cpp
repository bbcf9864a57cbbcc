#include "llmrl/nn/adam.hpp"

#include <cmath>
#include <string>

#include "llmrl/errors.hpp"

namespace llmrl::nn {

Adam::Adam(const Mlp& net, AdamConfig config) : config_(config) {
    if (!(config_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(config_.beta1 > 0.0 && config_.beta1 < 1.0) || !(config_.beta2 > 0.0 && config_.beta2 < 1.0)) {
        throw ConfigError("moment decay rates must lie in (0, 1)");
    }
    for (const auto& layer : net.layers()) {
        m_weight_.push_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
        v_weight_.push_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
        m_bias_.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
        v_bias_.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }
}

void Adam::set_learning_rate(double lr) {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    config_.learning_rate = lr;
}

void Adam::step(Mlp& net, const Gradients& grads) {
    auto& layers = net.layers();
    if (grads.weight.size() != layers.size() || grads.bias.size() != layers.size() ||
        m_weight_.size() != layers.size()) {
        throw ShapeError("optimizer/gradient layer count does not match network");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (grads.weight[i].rows() != layers[i].weight.rows() || grads.weight[i].cols() != layers[i].weight.cols() ||
            grads.bias[i].size() != layers[i].bias.size()) {
            throw ShapeError("gradient shape mismatch at layer " + std::to_string(i));
        }
        if (!grads.weight[i].allFinite()) {
            throw NumericError("non-finite gradient in layer" + std::to_string(i) + ".weight");
        }
        if (!grads.bias[i].allFinite()) {
            throw NumericError("non-finite gradient in layer" + std::to_string(i) + ".bias");
        }
    }

    double scale = 1.0;
    if (config_.clip_norm > 0.0) {
        const double norm = std::sqrt(grads.squared_norm());
        if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
    }

    ++steps_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    const double lr = config_.learning_rate;
    const double eps = config_.epsilon;

    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = b1 * m + (1.0 - b1) * scale * g;
        v = b2 * v + (1.0 - b2) * (scale * g).cwiseProduct(scale * g);
        param.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
    };
    for (std::size_t i = 0; i < layers.size(); ++i) {
        update(layers[i].weight, m_weight_[i], v_weight_[i], grads.weight[i]);
        update(layers[i].bias, m_bias_[i], v_bias_[i], grads.bias[i]);
    }
}

}  // namespace llmrl::nn
