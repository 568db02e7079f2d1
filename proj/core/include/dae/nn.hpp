#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dae {

/// Row-major dense matrix; rows are events, columns are features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using EventMatrix = Matrix;

enum class Activation { relu, linear };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected layer computing act(W x + b).
struct DenseLayer {
    Matrix weights;  // [n_out x n_in]
    Vector bias;     // [n_out]
    Activation activation = Activation::linear;

    DenseLayer(int n_in, int n_out, Activation act);

    int n_in() const { return static_cast<int>(weights.cols()); }
    int n_out() const { return static_cast<int>(weights.rows()); }
    std::int64_t parameter_count() const { return weights.size() + bias.size(); }
};

/// Chain of dense layers. Parameters are reachable only through
/// mutable_layers(), which bumps the revision so that forward caches taken
/// before the mutation are rejected by backward().
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);

    int input_dim() const { return layers_.empty() ? 0 : layers_.front().n_in(); }
    int output_dim() const { return layers_.empty() ? 0 : layers_.back().n_out(); }
    std::int64_t parameter_count() const;
    /// Widths from input to output, e.g. {57, 256, 128, 64, 32, 5}.
    std::vector<int> layer_sizes() const;

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& mutable_layers() {
        ++revision_;
        return layers_;
    }
    std::uint64_t revision() const { return revision_; }

private:
    std::vector<DenseLayer> layers_;
    std::uint64_t revision_ = 0;
};

/// Per-layer activation pattern for init_mlp.
struct ActivationSpec {
    Activation hidden = Activation::relu;
    Activation output = Activation::linear;

    Activation for_layer(std::size_t index, std::size_t n_layers) const {
        return index + 1 == n_layers ? output : hidden;
    }
};

/// Builds an MLP with He-normal weights for ReLU layers, Glorot-uniform
/// weights for linear layers and zero biases. Throws ConfigError for fewer
/// than two sizes or any non-positive size.
Mlp init_mlp(std::span<const int> layer_sizes, ActivationSpec activations, std::uint64_t seed);

struct ForwardCache {
    std::vector<Matrix> inputs;  // input to layer k, i.e. the activation of layer k - 1
    Matrix output;
    const Mlp* owner = nullptr;
    std::uint64_t revision = 0;
};

/// Gradient storage with the same shapes as the parameters of an Mlp.
struct MlpGradients {
    std::vector<Matrix> weights;
    std::vector<Vector> bias;

    static MlpGradients zeros_like(const Mlp& mlp);
    double squared_norm() const;
};

ForwardCache forward(const Mlp& mlp, const Matrix& batch);
/// Inference-only forward pass without a cache.
Matrix predict(const Mlp& mlp, const Matrix& batch);

struct BackwardResult {
    MlpGradients params;
    Matrix input_gradient;
};

BackwardResult backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& output_gradient);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
};

struct AdamState {
    AdamConfig config;
    MlpGradients first_moment;
    MlpGradients second_moment;
    std::int64_t step_count = 0;

    static AdamState for_model(const Mlp& mlp, AdamConfig config = {});
};

/// One bias-corrected Adam update in place.
void adam_step(Mlp& mlp, const MlpGradients& gradients, AdamState& state);

}  // namespace dae
