#include "dae/nn.hpp"

#include <cmath>
#include <random>

#include "dae/error.hpp"

namespace dae {

std::string to_string(Activation a) {
    return a == Activation::relu ? "relu" : "linear";
}

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "linear") return Activation::linear;
    throw ConfigError("unknown activation '" + name + "'");
}

DenseLayer::DenseLayer(int n_in, int n_out, Activation act)
    : weights(Matrix::Zero(n_out, n_in)), bias(Vector::Zero(n_out)), activation(act) {
    if (n_in <= 0 || n_out <= 0) throw ConfigError("dense layer dimensions must be positive");
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ConfigError("an MLP needs at least one layer");
    for (std::size_t k = 1; k < layers_.size(); ++k) {
        if (layers_[k].n_in() != layers_[k - 1].n_out())
            throw ConfigError("layer " + std::to_string(k) + " input width " + std::to_string(layers_[k].n_in()) +
                              " does not match previous output width " + std::to_string(layers_[k - 1].n_out()));
    }
    for (const auto& l : layers_) {
        if (l.bias.size() != l.weights.rows()) throw ConfigError("bias length does not match weight rows");
        if (!l.weights.allFinite() || !l.bias.allFinite()) throw ConfigError("non-finite parameter");
    }
}

std::int64_t Mlp::parameter_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers_) n += l.parameter_count();
    return n;
}

std::vector<int> Mlp::layer_sizes() const {
    std::vector<int> sizes;
    if (layers_.empty()) return sizes;
    sizes.push_back(layers_.front().n_in());
    for (const auto& l : layers_) sizes.push_back(l.n_out());
    return sizes;
}

Mlp init_mlp(std::span<const int> layer_sizes, ActivationSpec activations, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw ConfigError("init_mlp needs at least two layer sizes");
    for (int s : layer_sizes)
        if (s <= 0) throw ConfigError("layer sizes must be positive");

    std::mt19937_64 rng(seed);
    const std::size_t n_layers = layer_sizes.size() - 1;
    std::vector<DenseLayer> layers;
    layers.reserve(n_layers);
    for (std::size_t k = 0; k < n_layers; ++k) {
        const int n_in = layer_sizes[k];
        const int n_out = layer_sizes[k + 1];
        DenseLayer layer(n_in, n_out, activations.for_layer(k, n_layers));
        if (layer.activation == Activation::relu) {
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / n_in));
            for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(rng);
        } else {
            const double limit = std::sqrt(6.0 / (n_in + n_out));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(rng);
        }
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

MlpGradients MlpGradients::zeros_like(const Mlp& mlp) {
    MlpGradients g;
    for (const auto& l : mlp.layers()) {
        g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
        g.bias.push_back(Vector::Zero(l.bias.size()));
    }
    return g;
}

double MlpGradients::squared_norm() const {
    double s = 0.0;
    for (const auto& w : weights) s += w.squaredNorm();
    for (const auto& b : bias) s += b.squaredNorm();
    return s;
}

namespace {

void check_input(const Mlp& mlp, const Matrix& batch) {
    if (mlp.layers().empty()) throw ContractError("forward on an empty MLP");
    if (batch.cols() != mlp.input_dim())
        throw ContractError("batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                            std::to_string(mlp.input_dim()));
    if (!batch.allFinite()) throw DataError("non-finite value in network input");
}

// out = act(in W^T + b), bias and activation fused into one pass.
void affine(const DenseLayer& layer, const Matrix& in, Matrix& out) {
    out.noalias() = in * layer.weights.transpose();
    if (layer.activation == Activation::relu)
        out = (out.rowwise() + layer.bias.transpose()).cwiseMax(0.0);
    else
        out.rowwise() += layer.bias.transpose();
}

}  // namespace

ForwardCache forward(const Mlp& mlp, const Matrix& batch) {
    check_input(mlp, batch);
    ForwardCache cache;
    cache.owner = &mlp;
    cache.revision = mlp.revision();
    const auto& layers = mlp.layers();
    cache.inputs.reserve(layers.size());

    cache.inputs.push_back(batch);
    for (std::size_t k = 0; k < layers.size(); ++k) {
        Matrix a;
        affine(layers[k], cache.inputs[k], a);
        if (k + 1 < layers.size())
            cache.inputs.push_back(std::move(a));
        else
            cache.output = std::move(a);
    }
    return cache;
}

Matrix predict(const Mlp& mlp, const Matrix& batch) {
    check_input(mlp, batch);
    Matrix current = batch;
    Matrix next;
    for (const auto& layer : mlp.layers()) {
        affine(layer, current, next);
        std::swap(current, next);
    }
    return current;
}

BackwardResult backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& output_gradient) {
    const auto& layers = mlp.layers();
    if (cache.owner != &mlp || cache.revision != mlp.revision())
        throw ContractError("forward cache does not belong to the current parameters of this network");
    if (cache.inputs.size() != layers.size())
        throw ContractError("forward cache layer count does not match the network");
    if (output_gradient.rows() != cache.output.rows() || output_gradient.cols() != cache.output.cols())
        throw ContractError("output gradient shape does not match the cached output");

    BackwardResult result;
    result.params.weights.resize(layers.size());
    result.params.bias.resize(layers.size());

    Matrix delta = output_gradient;
    for (std::size_t k = layers.size(); k-- > 0;) {
        const auto& layer = layers[k];
        if (layer.activation == Activation::relu) {
            const Matrix& a = k + 1 < layers.size() ? cache.inputs[k + 1] : cache.output;
            delta = (a.array() > 0.0).select(delta, 0.0);
        }
        result.params.weights[k].noalias() = delta.transpose() * cache.inputs[k];
        result.params.bias[k] = delta.colwise().sum().transpose();
        Matrix upstream;
        upstream.noalias() = delta * layer.weights;
        delta = std::move(upstream);
    }
    result.input_gradient = std::move(delta);
    return result;
}

AdamState AdamState::for_model(const Mlp& mlp, AdamConfig config) {
    AdamState s;
    s.config = config;
    s.first_moment = MlpGradients::zeros_like(mlp);
    s.second_moment = MlpGradients::zeros_like(mlp);
    return s;
}

void adam_step(Mlp& mlp, const MlpGradients& gradients, AdamState& state) {
    const auto& layers = mlp.layers();
    const std::size_t n = layers.size();
    if (gradients.weights.size() != n || gradients.bias.size() != n || state.first_moment.weights.size() != n ||
        state.second_moment.weights.size() != n)
        throw ContractError("adam_step: gradient/state layer count does not match the network");
    for (std::size_t k = 0; k < n; ++k) {
        const auto& l = layers[k];
        if (gradients.weights[k].rows() != l.weights.rows() || gradients.weights[k].cols() != l.weights.cols() ||
            gradients.bias[k].size() != l.bias.size() ||
            state.first_moment.weights[k].rows() != l.weights.rows() ||
            state.first_moment.weights[k].cols() != l.weights.cols())
            throw ContractError("adam_step: shape mismatch in layer " + std::to_string(k));
    }

    state.step_count += 1;
    const auto& c = state.config;
    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);

    auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
        m = c.beta1 * m + (1.0 - c.beta1) * grad;
        v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
        param.array() -= c.learning_rate * (m.array() / correction1) /
                         ((v.array() / correction2).sqrt() + c.epsilon);
    };

    auto& mutable_layers = mlp.mutable_layers();
    for (std::size_t k = 0; k < n; ++k) {
        update(mutable_layers[k].weights, gradients.weights[k], state.first_moment.weights[k],
               state.second_moment.weights[k]);
        update(mutable_layers[k].bias, gradients.bias[k], state.first_moment.bias[k], state.second_moment.bias[k]);
    }
}

}  // namespace dae
