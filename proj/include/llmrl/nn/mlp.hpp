#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace llmrl::nn {

using Rng = std::mt19937_64;

enum class Activation { relu, tanh, linear };

std::string to_string(Activation activation);

struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
    Activation activation = Activation::linear;
};

/// Parameter gradients for every layer plus the gradient w.r.t. the network input.
struct Gradients {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;
    Eigen::MatrixXd input;  // in x batch

    double squared_norm() const;
    void scale(double factor);
};

/// Activations recorded by a forward pass; required by backward().
struct ForwardContext {
    std::vector<Eigen::MatrixXd> inputs;   // input to each layer, one column per sample
    std::vector<Eigen::MatrixXd> outputs;  // post-activation output of each layer

    bool empty() const noexcept { return inputs.empty(); }
};

/// Dense feedforward network. Samples are columns; a single vector is a batch of one.
class Mlp {
public:
    Mlp() = default;

    /// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
    Mlp(const std::vector<int>& layer_sizes, Activation hidden, Activation output, Rng& rng);

    explicit Mlp(std::vector<Layer> layers);

    std::size_t input_size() const;
    std::size_t output_size() const;
    std::vector<int> layer_sizes() const;
    std::size_t parameter_count() const;

    Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& batch) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& batch, ForwardContext& context) const;

    /// Backpropagates `output_grad` (out x batch) through the recorded pass. Gradients are
    /// summed over the batch columns; callers fold any 1/batch factor into output_grad.
    Gradients backward(const ForwardContext& context, const Eigen::MatrixXd& output_grad) const;

    Gradients zero_gradients() const;

    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    bool same_architecture(const Mlp& other) const;
    bool all_finite() const;

    friend bool operator==(const Mlp& a, const Mlp& b);

private:
    std::vector<Layer> layers_;
};

/// target <- tau * online + (1 - tau) * target, elementwise.
void polyak_update(Mlp& target, const Mlp& online, double tau);

}  // namespace llmrl::nn
