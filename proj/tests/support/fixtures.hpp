#pragma once

#include <random>
#include <vector>

#include "dae/autoencoder.hpp"
#include "dae/nn.hpp"

namespace fixture {

/// Overwrites every weight and bias with N(0, sigma) draws.
inline void randomize(dae::Mlp& mlp, std::uint64_t seed, double sigma) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, sigma);
    for (auto& l : mlp.mutable_layers()) {
        for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = dist(rng);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = dist(rng);
    }
}

inline dae::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    dae::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

// ReLU on/off pattern of every hidden unit for every event.
inline std::vector<bool> relu_pattern(const dae::Mlp& mlp, const dae::Matrix& x) {
    const dae::ForwardCache c = dae::forward(mlp, x);
    std::vector<bool> p;
    for (std::size_t k = 1; k < c.inputs.size(); ++k)
        for (Eigen::Index i = 0; i < c.inputs[k].size(); ++i) p.push_back(c.inputs[k].data()[i] > 0.0);
    for (Eigen::Index i = 0; i < c.output.size(); ++i) p.push_back(c.output.data()[i] > 0.0);
    return p;
}

inline std::vector<bool> relu_pattern(const dae::Autoencoder& ae, const dae::Matrix& x) {
    std::vector<bool> p;
    const dae::ForwardCache e = dae::forward(ae.encoder, x);
    const dae::ForwardCache d = dae::forward(ae.decoder, e.output);
    for (const auto* c : {&e, &d})
        for (std::size_t k = 1; k < c->inputs.size(); ++k)
            for (Eigen::Index i = 0; i < c->inputs[k].size(); ++i) p.push_back(c->inputs[k].data()[i] > 0.0);
    return p;
}

/// Pairwise order of the reconstruction errors of both autoencoders. DisCo
/// has a kink wherever two scores swap.
inline std::vector<bool> score_order(const dae::DualAutoencoder& m, const dae::Matrix& x) {
    std::vector<bool> o;
    for (const auto* ae : {&m.ae1, &m.ae2}) {
        const dae::ScoreVector r = dae::reconstruction_error(*ae, x);
        for (std::size_t i = 0; i < r.size(); ++i)
            for (std::size_t j = 0; j < i; ++j) o.push_back(r[i] > r[j]);
    }
    return o;
}

/// Visits every parameter of an autoencoder with the matching gradient entry.
template <typename F>
void each_parameter(dae::Autoencoder& ae, const dae::AutoencoderGradients& g, F&& f) {
    auto visit = [&](dae::Mlp& m, const dae::MlpGradients& mg) {
        for (std::size_t k = 0; k < m.layers().size(); ++k) {
            const Eigen::Index nw = m.layers()[k].weights.size();
            for (Eigen::Index i = 0; i < nw; ++i) f(m.mutable_layers()[k].weights.data()[i], mg.weights[k].data()[i]);
            const Eigen::Index nb = m.layers()[k].bias.size();
            for (Eigen::Index i = 0; i < nb; ++i) f(m.mutable_layers()[k].bias[i], mg.bias[k][i]);
        }
    };
    visit(ae.encoder, g.encoder);
    visit(ae.decoder, g.decoder);
}

}  // namespace fixture
