#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dae/disco.hpp"
#include "dae/nn.hpp"
#include "dae/standardize.hpp"

namespace dae {

/// Encoder widths of each autoencoder; the decoder mirrors them back to the input.
inline const std::vector<int> kDefaultEncoderWidths = {256, 128, 64, 32, 5};

struct Autoencoder {
    Mlp encoder;
    Mlp decoder;

    int input_dim() const { return encoder.input_dim(); }
    int latent_dim() const { return encoder.output_dim(); }
    std::int64_t parameter_count() const { return encoder.parameter_count() + decoder.parameter_count(); }
};

/// Encoder input_dim -> widths..., decoder mirrored back to input_dim. ReLU on
/// hidden layers, linear latent and output layers. Throws ConfigError unless
/// the latent width is smaller than input_dim.
Autoencoder make_autoencoder(int input_dim, std::span<const int> encoder_widths, std::uint64_t seed);

struct DualAutoencoder {
    Autoencoder ae1;
    Autoencoder ae2;
    std::optional<StandardizationStats> stats;

    int input_dim() const { return ae1.input_dim(); }
};

/// Both autoencoders share the architecture and get independent seeds derived from `seed`.
DualAutoencoder make_dual_autoencoder(int input_dim, std::span<const int> encoder_widths, std::uint64_t seed);

std::int64_t count_parameters(const Autoencoder& ae);
std::int64_t count_parameters(const DualAutoencoder& model);

Matrix reconstruct(const Autoencoder& ae, const Matrix& batch);

/// R(x) = sum_j (xhat_j - x_j)^2 per row. Large inputs are processed in chunks.
ScoreVector reconstruction_error(const Autoencoder& ae, const Matrix& batch);

/// Monotone map applied to reconstruction errors before the DisCo penalty.
enum class ScoreTransform { none, log1p };

std::string to_string(ScoreTransform t);
ScoreTransform score_transform_from_string(const std::string& name);

struct LossComponents {
    double recon1 = 0.0;         // mean over the batch of R1^p
    double recon2 = 0.0;         // mean over the batch of R2^p
    double disco_squared = 0.0;  // DisCo^2[R1, R2], before lambda
    double total = 0.0;          // recon1 + recon2 + lambda * disco_squared
};

/// Joint loss on one batch. A constant score vector contributes a zero
/// penalty. Throws ContractError for fewer than two rows.
LossComponents total_loss(const DualAutoencoder& model, const Matrix& batch, double lambda, int loss_power,
                          ScoreTransform transform = ScoreTransform::none);

struct AutoencoderGradients {
    MlpGradients encoder;
    MlpGradients decoder;
};

struct LossGradient {
    LossComponents loss;
    AutoencoderGradients ae1;
    AutoencoderGradients ae2;
    bool degenerate = false;  // DisCo skipped because a score vector was constant
};

/// total_loss together with its gradient with respect to every parameter of
/// both autoencoders. This is exactly what one training step descends.
LossGradient total_loss_gradient(const DualAutoencoder& model, const Matrix& batch, double lambda, int loss_power,
                                 ScoreTransform transform = ScoreTransform::none);

/// Gradient of the batch mean of R^p for one autoencoder; the loss value is
/// stored through `loss` when non-null.
AutoencoderGradients reconstruction_loss_gradient(const Autoencoder& ae, const Matrix& batch, int loss_power,
                                                  double* loss = nullptr);

struct TrainConfig {
    double lambda = 100.0;
    int batch_size = 10000;
    int max_epochs = 1000;
    int patience = 10;
    int loss_power = 1;
    std::uint64_t seed = 0;
    AdamConfig adam;
    ScoreTransform disco_transform = ScoreTransform::none;

    /// Throws ConfigError for batch_size < 2, patience < 1, loss_power outside {1, 2}, ...
    void validate() const;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_recon1 = 0.0;
    double train_recon2 = 0.0;
    double train_disco = 0.0;
    double train_total = 0.0;
    double test_recon1 = 0.0;
    double test_recon2 = 0.0;
    double test_disco = 0.0;
    double test_total = 0.0;
    int degenerate_batches = 0;  // batches whose DisCo penalty was skipped
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;  // 1-based index of the best test_total

    /// Columns: epoch, train_recon1, train_recon2, train_disco, train_total, test_total.
    void write_csv(const std::filesystem::path& path) const;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
    DualAutoencoder model;
    TrainHistory history;
};

/// Trains both autoencoders jointly with Adam on shuffled batches, evaluates
/// the test split after every epoch and returns the snapshot with the lowest
/// test total loss. Inputs must already be standardized. Throws DataError for
/// empty splits and DivergenceError for a non-finite loss.
TrainResult train(DualAutoencoder model, const Matrix& train_data, const Matrix& test_data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct SingleTrainResult {
    Autoencoder model;
    TrainHistory history;
};

/// Plain reconstruction-loss training of one autoencoder; config.lambda is ignored.
SingleTrainResult train_single(Autoencoder model, const Matrix& train_data, const Matrix& test_data,
                               const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace dae
