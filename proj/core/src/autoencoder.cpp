#include "dae/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "dae/csv.hpp"
#include "dae/error.hpp"

namespace dae {

namespace {

constexpr Eigen::Index kInferenceChunk = 8192;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

Autoencoder make_autoencoder(int input_dim, std::span<const int> encoder_widths, std::uint64_t seed) {
    if (input_dim <= 0) throw ConfigError("input_dim must be positive");
    if (encoder_widths.empty()) throw ConfigError("encoder needs at least one layer");
    if (encoder_widths.back() >= input_dim)
        throw ConfigError("latent width " + std::to_string(encoder_widths.back()) + " must be smaller than input_dim " +
                          std::to_string(input_dim));
    std::vector<int> enc{input_dim};
    enc.insert(enc.end(), encoder_widths.begin(), encoder_widths.end());
    std::vector<int> dec(enc.rbegin(), enc.rend());
    const ActivationSpec spec{Activation::relu, Activation::linear};
    return Autoencoder{init_mlp(enc, spec, splitmix64(seed)), init_mlp(dec, spec, splitmix64(seed ^ 0x5bd1e995ULL))};
}

DualAutoencoder make_dual_autoencoder(int input_dim, std::span<const int> encoder_widths, std::uint64_t seed) {
    DualAutoencoder model;
    model.ae1 = make_autoencoder(input_dim, encoder_widths, splitmix64(2 * seed));
    model.ae2 = make_autoencoder(input_dim, encoder_widths, splitmix64(2 * seed + 1));
    return model;
}

std::int64_t count_parameters(const Autoencoder& ae) {
    return ae.parameter_count();
}

std::int64_t count_parameters(const DualAutoencoder& model) {
    return model.ae1.parameter_count() + model.ae2.parameter_count();
}

Matrix reconstruct(const Autoencoder& ae, const Matrix& batch) {
    return predict(ae.decoder, predict(ae.encoder, batch));
}

ScoreVector reconstruction_error(const Autoencoder& ae, const Matrix& batch) {
    if (batch.cols() != ae.input_dim())
        throw ContractError("batch has " + std::to_string(batch.cols()) + " features, autoencoder expects " +
                            std::to_string(ae.input_dim()));
    ScoreVector r(static_cast<std::size_t>(batch.rows()));
    for (Eigen::Index start = 0; start < batch.rows(); start += kInferenceChunk) {
        const Eigen::Index len = std::min(kInferenceChunk, batch.rows() - start);
        const Matrix chunk = batch.middleRows(start, len);
        const Matrix residual = reconstruct(ae, chunk) - chunk;
        for (Eigen::Index i = 0; i < len; ++i) r[static_cast<std::size_t>(start + i)] = residual.row(i).squaredNorm();
    }
    return r;
}

std::string to_string(ScoreTransform t) {
    return t == ScoreTransform::log1p ? "log1p" : "none";
}

ScoreTransform score_transform_from_string(const std::string& name) {
    if (name == "none") return ScoreTransform::none;
    if (name == "log1p") return ScoreTransform::log1p;
    throw ConfigError("unknown score transform '" + name + "'");
}

namespace {

ScoreVector transformed(const ScoreVector& r, ScoreTransform t) {
    if (t == ScoreTransform::none) return r;
    ScoreVector out(r.size());
    std::transform(r.begin(), r.end(), out.begin(), [](double x) { return std::log1p(x); });
    return out;
}

double transform_derivative(double r, ScoreTransform t) {
    return t == ScoreTransform::log1p ? 1.0 / (1.0 + r) : 1.0;
}

double mean_power(const ScoreVector& r, int power) {
    double s = 0.0;
    for (double x : r) s += power == 1 ? x : x * x;
    return s / static_cast<double>(r.size());
}

}  // namespace

LossComponents total_loss(const DualAutoencoder& model, const Matrix& batch, double lambda, int loss_power,
                          ScoreTransform transform) {
    if (batch.rows() < 2) throw ContractError("total_loss needs a batch of at least two events");
    if (loss_power != 1 && loss_power != 2) throw ConfigError("loss_power must be 1 or 2");
    const ScoreVector r1 = reconstruction_error(model.ae1, batch);
    const ScoreVector r2 = reconstruction_error(model.ae2, batch);
    LossComponents c;
    c.recon1 = mean_power(r1, loss_power);
    c.recon2 = mean_power(r2, loss_power);
    try {
        const double dcorr = distance_correlation(transformed(r1, transform), transformed(r2, transform));
        c.disco_squared = dcorr * dcorr;
    } catch (const DegenerateInputError&) {
        c.disco_squared = 0.0;
    }
    c.total = c.recon1 + c.recon2 + lambda * c.disco_squared;
    return c;
}

void TrainConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a finite non-negative number");
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
    if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (loss_power != 1 && loss_power != 2) throw ConfigError("loss_power must be 1 or 2");
    if (!(adam.learning_rate >= 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
        !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0))
        throw ConfigError("invalid Adam settings");
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << "epoch,train_recon1,train_recon2,train_disco,train_total,test_total\n";
    for (const auto& e : epochs)
        out << e.epoch << ',' << format_double(e.train_recon1) << ',' << format_double(e.train_recon2) << ','
            << format_double(e.train_disco) << ',' << format_double(e.train_total) << ','
            << format_double(e.test_total) << '\n';
}

namespace {

struct GradientPass {
    double recon[2] = {0.0, 0.0};
    double disco = 0.0;
    bool degenerate = false;
    std::vector<AutoencoderGradients> grads;
};

// Loss and parameter gradients for one or two autoencoders on one batch.
GradientPass gradient_pass(const std::vector<const Autoencoder*>& aes, const Matrix& x, double lambda, int p,
                           ScoreTransform transform) {
    const std::size_t n_ae = aes.size();
    const double batch = static_cast<double>(x.rows());

    std::vector<ForwardCache> enc(n_ae), dec(n_ae);
    std::vector<Matrix> residual(n_ae);
    std::vector<ScoreVector> r(n_ae);
    GradientPass out;
    for (std::size_t k = 0; k < n_ae; ++k) {
        enc[k] = forward(aes[k]->encoder, x);
        dec[k] = forward(aes[k]->decoder, enc[k].output);
        residual[k] = dec[k].output - x;
        r[k].resize(static_cast<std::size_t>(x.rows()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) r[k][static_cast<std::size_t>(i)] = residual[k].row(i).squaredNorm();
        out.recon[k] = mean_power(r[k], p);
    }

    // dL/dR per event and autoencoder
    std::vector<Vector> dr(n_ae, Vector(x.rows()));
    for (std::size_t k = 0; k < n_ae; ++k)
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double ri = r[k][static_cast<std::size_t>(i)];
            dr[k][i] = (p == 1 ? 1.0 : 2.0 * ri) / batch;
        }

    if (n_ae == 2) {
        const ScoreVector t1 = transformed(r[0], transform);
        const ScoreVector t2 = transformed(r[1], transform);
        try {
            if (lambda > 0.0) {
                const DiscoGradient g = disco_squared_with_gradient(t1, t2);
                out.disco = g.value;
                for (Eigen::Index i = 0; i < x.rows(); ++i) {
                    const auto s = static_cast<std::size_t>(i);
                    dr[0][i] += lambda * g.du[s] * transform_derivative(r[0][s], transform);
                    dr[1][i] += lambda * g.dv[s] * transform_derivative(r[1][s], transform);
                }
            } else {
                const double d = distance_correlation(t1, t2);
                out.disco = d * d;
            }
        } catch (const DegenerateInputError&) {
            out.degenerate = true;
        }
    }

    for (std::size_t k = 0; k < n_ae; ++k) {
        const Matrix out_grad = (2.0 * dr[k]).asDiagonal() * residual[k];
        BackwardResult dec_grad = backward(aes[k]->decoder, dec[k], out_grad);
        BackwardResult enc_grad = backward(aes[k]->encoder, enc[k], dec_grad.input_gradient);
        out.grads.push_back(AutoencoderGradients{std::move(enc_grad.params), std::move(dec_grad.params)});
    }
    return out;
}

void check_batch(const Matrix& batch, int input_dim) {
    if (batch.rows() < 2) throw ContractError("loss needs a batch of at least two events");
    if (batch.cols() != input_dim)
        throw ContractError("batch has " + std::to_string(batch.cols()) + " features, autoencoder expects " +
                            std::to_string(input_dim));
}

}  // namespace

LossGradient total_loss_gradient(const DualAutoencoder& model, const Matrix& batch, double lambda, int loss_power,
                                 ScoreTransform transform) {
    check_batch(batch, model.input_dim());
    if (loss_power != 1 && loss_power != 2) throw ConfigError("loss_power must be 1 or 2");
    GradientPass pass = gradient_pass({&model.ae1, &model.ae2}, batch, lambda, loss_power, transform);
    LossGradient g;
    g.loss.recon1 = pass.recon[0];
    g.loss.recon2 = pass.recon[1];
    g.loss.disco_squared = pass.disco;
    g.loss.total = pass.recon[0] + pass.recon[1] + lambda * pass.disco;
    g.degenerate = pass.degenerate;
    g.ae1 = std::move(pass.grads[0]);
    g.ae2 = std::move(pass.grads[1]);
    return g;
}

AutoencoderGradients reconstruction_loss_gradient(const Autoencoder& ae, const Matrix& batch, int loss_power,
                                                  double* loss) {
    check_batch(batch, ae.input_dim());
    if (loss_power != 1 && loss_power != 2) throw ConfigError("loss_power must be 1 or 2");
    GradientPass pass = gradient_pass({&ae}, batch, 0.0, loss_power, ScoreTransform::none);
    if (loss) *loss = pass.recon[0];
    return std::move(pass.grads[0]);
}

namespace {

// Joint trainer over one or two autoencoders. With a single autoencoder the
// DisCo term is absent and the second reconstruction column stays zero.
class Trainer {
public:
    Trainer(std::vector<Autoencoder*> aes, const TrainConfig& config) : aes_(std::move(aes)), config_(config) {
        for (auto* ae : aes_) {
            adam_.push_back({AdamState::for_model(ae->encoder, config.adam), AdamState::for_model(ae->decoder, config.adam)});
        }
    }

    struct BatchLoss {
        double recon[2] = {0.0, 0.0};
        double disco = 0.0;
        bool degenerate = false;
    };

    BatchLoss step(const Matrix& x) {
        std::vector<const Autoencoder*> view(aes_.begin(), aes_.end());
        GradientPass pass = gradient_pass(view, x, config_.lambda, config_.loss_power, config_.disco_transform);
        for (std::size_t k = 0; k < aes_.size(); ++k) {
            adam_step(aes_[k]->decoder, pass.grads[k].decoder, adam_[k].second);
            adam_step(aes_[k]->encoder, pass.grads[k].encoder, adam_[k].first);
        }
        BatchLoss loss;
        loss.recon[0] = pass.recon[0];
        loss.recon[1] = pass.recon[1];
        loss.disco = pass.disco;
        loss.degenerate = pass.degenerate;
        return loss;
    }

    BatchLoss evaluate(const Matrix& x) const {
        BatchLoss loss;
        std::vector<ScoreVector> r;
        for (std::size_t k = 0; k < aes_.size(); ++k) {
            r.push_back(reconstruction_error(*aes_[k], x));
            loss.recon[k] = mean_power(r.back(), config_.loss_power);
        }
        if (aes_.size() == 2) {
            try {
                const double d = distance_correlation(transformed(r[0], config_.disco_transform),
                                                      transformed(r[1], config_.disco_transform));
                loss.disco = d * d;
            } catch (const DegenerateInputError&) {
                loss.degenerate = true;
            }
        }
        return loss;
    }

    double lambda() const { return aes_.size() == 2 ? config_.lambda : 0.0; }

private:
    std::vector<Autoencoder*> aes_;
    const TrainConfig& config_;
    std::vector<std::pair<AdamState, AdamState>> adam_;
};

Matrix gather(const Matrix& data, const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) {
    Matrix out(static_cast<Eigen::Index>(end - begin), data.cols());
    for (std::size_t i = begin; i < end; ++i)
        out.row(static_cast<Eigen::Index>(i - begin)) = data.row(static_cast<Eigen::Index>(order[i]));
    return out;
}

void check_split(const Matrix& data, int input_dim, const char* name) {
    if (data.rows() < 2) throw DataError(std::string(name) + " split needs at least two events");
    if (data.cols() != input_dim)
        throw ContractError(std::string(name) + " split has " + std::to_string(data.cols()) +
                            " features, model expects " + std::to_string(input_dim));
    if (!data.allFinite()) throw DataError(std::string(name) + " split contains non-finite values");
}

// Runs the epoch loop; `snapshot` stores the current parameters as the best model.
TrainHistory run(Trainer& trainer, const Matrix& train_data, const Matrix& test_data, const TrainConfig& config,
                 const std::function<void()>& snapshot, const EpochCallback& on_epoch) {
    const std::size_t n_train = static_cast<std::size_t>(train_data.rows());
    const std::size_t n_test = static_cast<std::size_t>(test_data.rows());
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainHistory history;
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochRecord rec;
        rec.epoch = epoch;
        double weight = 0.0;
        for (std::size_t begin = 0; begin < n_train; begin += batch) {
            const std::size_t end = std::min(begin + batch, n_train);
            if (end - begin < 2) continue;
            Trainer::BatchLoss l;
            try {
                l = trainer.step(gather(train_data, order, begin, end));
            } catch (const DataError&) {
                throw DivergenceError("non-finite activations during training", epoch);
            }
            const double w = static_cast<double>(end - begin);
            rec.train_recon1 += w * l.recon[0];
            rec.train_recon2 += w * l.recon[1];
            rec.train_disco += w * l.disco;
            rec.degenerate_batches += l.degenerate ? 1 : 0;
            weight += w;
        }
        rec.train_recon1 /= weight;
        rec.train_recon2 /= weight;
        rec.train_disco /= weight;
        rec.train_total = rec.train_recon1 + rec.train_recon2 + trainer.lambda() * rec.train_disco;

        double test_weight = 0.0;
        for (std::size_t begin = 0; begin < n_test; begin += batch) {
            const std::size_t end = std::min(begin + batch, n_test);
            if (end - begin < 2) continue;
            Trainer::BatchLoss l;
            try {
                l = trainer.evaluate(
                    test_data.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)));
            } catch (const DataError&) {
                throw DivergenceError("non-finite activations during evaluation", epoch);
            }
            const double w = static_cast<double>(end - begin);
            rec.test_recon1 += w * l.recon[0];
            rec.test_recon2 += w * l.recon[1];
            rec.test_disco += w * l.disco;
            test_weight += w;
        }
        rec.test_recon1 /= test_weight;
        rec.test_recon2 /= test_weight;
        rec.test_disco /= test_weight;
        rec.test_total = rec.test_recon1 + rec.test_recon2 + trainer.lambda() * rec.test_disco;

        if (!std::isfinite(rec.train_total) || !std::isfinite(rec.test_total))
            throw DivergenceError("training loss became non-finite", epoch);
        if (rec.degenerate_batches > 0)
            std::clog << "warning: epoch " << epoch << ": DisCo penalty skipped on " << rec.degenerate_batches
                      << " batch(es) with constant reconstruction error\n";

        history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);

        if (rec.test_total < best) {
            best = rec.test_total;
            history.best_epoch = epoch;
            since_best = 0;
            snapshot();
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    return history;
}

}  // namespace

TrainResult train(DualAutoencoder model, const Matrix& train_data, const Matrix& test_data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    check_split(train_data, model.input_dim(), "training");
    check_split(test_data, model.input_dim(), "test");
    if (model.ae2.input_dim() != model.input_dim()) throw ContractError("autoencoders disagree on input_dim");

    TrainResult result;
    result.model = model;
    Trainer trainer({&model.ae1, &model.ae2}, config);
    result.history = run(trainer, train_data, test_data, config, [&] { result.model = model; }, on_epoch);
    return result;
}

SingleTrainResult train_single(Autoencoder model, const Matrix& train_data, const Matrix& test_data,
                               const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    check_split(train_data, model.input_dim(), "training");
    check_split(test_data, model.input_dim(), "test");

    SingleTrainResult result;
    result.model = model;
    Trainer trainer({&model}, config);
    result.history = run(trainer, train_data, test_data, config, [&] { result.model = model; }, on_epoch);
    return result;
}

}  // namespace dae
