#include "llmrl/nn/mlp.hpp"

#include <cmath>

#include "llmrl/errors.hpp"

namespace llmrl::nn {
namespace {

void apply_activation(Eigen::MatrixXd& z, Activation activation) {
    switch (activation) {
        case Activation::relu:
            z = z.cwiseMax(0.0);
            break;
        case Activation::tanh:
            z = z.array().tanh().matrix();
            break;
        case Activation::linear:
            break;
    }
}

// Multiplies the incoming gradient by the activation derivative, expressed via the output.
void apply_derivative(Eigen::MatrixXd& grad, const Eigen::MatrixXd& output, Activation activation) {
    switch (activation) {
        case Activation::relu:
            grad = (output.array() > 0.0).select(grad, 0.0);
            break;
        case Activation::tanh:
            grad = (grad.array() * (1.0 - output.array().square())).matrix();
            break;
        case Activation::linear:
            break;
    }
}

}  // namespace

std::string to_string(Activation activation) {
    switch (activation) {
        case Activation::relu:
            return "relu";
        case Activation::tanh:
            return "tanh";
        case Activation::linear:
            return "linear";
    }
    return "unknown";
}

double Gradients::squared_norm() const {
    double total = 0.0;
    for (const auto& w : weight) total += w.squaredNorm();
    for (const auto& b : bias) total += b.squaredNorm();
    return total;
}

void Gradients::scale(double factor) {
    for (auto& w : weight) w *= factor;
    for (auto& b : bias) b *= factor;
}

Mlp::Mlp(const std::vector<int>& layer_sizes, Activation hidden, Activation output, Rng& rng) {
    if (layer_sizes.size() < 2) {
        throw ShapeError("mlp needs at least an input and an output size");
    }
    for (int size : layer_sizes) {
        if (size <= 0) throw ShapeError("mlp layer sizes must be positive");
    }
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
        const int fan_in = layer_sizes[i];
        const int fan_out = layer_sizes[i + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Layer layer;
        layer.weight.resize(fan_out, fan_in);
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
                layer.weight(r, c) = dist(rng);
            }
        }
        layer.bias = Eigen::VectorXd::Zero(fan_out);
        layer.activation = (i + 2 == layer_sizes.size()) ? output : hidden;
        layers_.push_back(std::move(layer));
    }
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("mlp needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& layer = layers_[i];
        if (layer.bias.size() != layer.weight.rows()) {
            throw ShapeError("layer " + std::to_string(i) + ": bias length does not match weight rows");
        }
        if (i > 0 && layer.weight.cols() != layers_[i - 1].weight.rows()) {
            throw ShapeError("layer " + std::to_string(i) + ": weight columns do not match previous layer");
        }
    }
}

std::size_t Mlp::input_size() const {
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t Mlp::output_size() const {
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

std::vector<int> Mlp::layer_sizes() const {
    std::vector<int> sizes;
    if (layers_.empty()) return sizes;
    sizes.push_back(static_cast<int>(layers_.front().weight.cols()));
    for (const auto& layer : layers_) sizes.push_back(static_cast<int>(layer.weight.rows()));
    return sizes;
}

std::size_t Mlp::parameter_count() const {
    std::size_t count = 0;
    for (const auto& layer : layers_) count += layer.weight.size() + layer.bias.size();
    return count;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
    Eigen::MatrixXd batch = input;
    return forward_batch(batch).col(0);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& batch) const {
    if (static_cast<std::size_t>(batch.rows()) != input_size()) {
        throw ShapeError("mlp input has " + std::to_string(batch.rows()) + " rows, expected " +
                         std::to_string(input_size()));
    }
    Eigen::MatrixXd x = batch;
    for (const auto& layer : layers_) {
        Eigen::MatrixXd z = layer.weight * x;
        z.colwise() += layer.bias;
        apply_activation(z, layer.activation);
        x = std::move(z);
    }
    return x;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& batch, ForwardContext& context) const {
    if (static_cast<std::size_t>(batch.rows()) != input_size()) {
        throw ShapeError("mlp input has " + std::to_string(batch.rows()) + " rows, expected " +
                         std::to_string(input_size()));
    }
    context.inputs.clear();
    context.outputs.clear();
    context.inputs.reserve(layers_.size());
    context.outputs.reserve(layers_.size());
    Eigen::MatrixXd x = batch;
    for (const auto& layer : layers_) {
        context.inputs.push_back(x);
        Eigen::MatrixXd z = layer.weight * x;
        z.colwise() += layer.bias;
        apply_activation(z, layer.activation);
        context.outputs.push_back(z);
        x = std::move(z);
    }
    return x;
}

Gradients Mlp::backward(const ForwardContext& context, const Eigen::MatrixXd& output_grad) const {
    if (context.empty() || context.inputs.size() != layers_.size()) {
        throw UsageError("backward called without a matching forward context");
    }
    const Eigen::Index batch = context.inputs.front().cols();
    if (static_cast<std::size_t>(output_grad.rows()) != output_size() || output_grad.cols() != batch) {
        throw ShapeError("output gradient shape does not match the recorded forward pass");
    }
    Gradients grads;
    grads.weight.resize(layers_.size());
    grads.bias.resize(layers_.size());
    Eigen::MatrixXd delta = output_grad;
    for (std::size_t idx = layers_.size(); idx-- > 0;) {
        const auto& layer = layers_[idx];
        apply_derivative(delta, context.outputs[idx], layer.activation);
        grads.weight[idx] = delta * context.inputs[idx].transpose();
        grads.bias[idx] = delta.rowwise().sum();
        delta = layer.weight.transpose() * delta;
    }
    grads.input = std::move(delta);
    return grads;
}

Gradients Mlp::zero_gradients() const {
    Gradients grads;
    for (const auto& layer : layers_) {
        grads.weight.push_back(Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
        grads.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }
    grads.input = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(input_size()), 1);
    return grads;
}

bool Mlp::same_architecture(const Mlp& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& a = layers_[i];
        const auto& b = other.layers_[i];
        if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
            a.activation != b.activation) {
            return false;
        }
    }
    return true;
}

bool Mlp::all_finite() const {
    for (const auto& layer : layers_) {
        if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
    }
    return true;
}

bool operator==(const Mlp& a, const Mlp& b) {
    if (!a.same_architecture(b)) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
        if (a.layers_[i].weight != b.layers_[i].weight || a.layers_[i].bias != b.layers_[i].bias) {
            return false;
        }
    }
    return true;
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ContractError("polyak tau must lie in [0, 1]");
    if (!target.same_architecture(online)) {
        throw ShapeError("polyak_update requires identical architectures");
    }
    auto& dst = target.layers();
    const auto& src = online.layers();
    if (tau == 1.0) {
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i].weight = src[i].weight;
            dst[i].bias = src[i].bias;
        }
        return;
    }
    if (tau == 0.0) return;
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i].weight = tau * src[i].weight + (1.0 - tau) * dst[i].weight;
        dst[i].bias = tau * src[i].bias + (1.0 - tau) * dst[i].bias;
    }
}

}  // namespace llmrl::nn
