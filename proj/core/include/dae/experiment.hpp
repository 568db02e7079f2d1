#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dae/abcd.hpp"
#include "dae/autoencoder.hpp"
#include "dae/generator.hpp"
#include "dae/trigger.hpp"

namespace dae {

struct DataConfig {
    std::size_t n_train = 200000;
    std::size_t n_test = 50000;
    std::size_t n_eval = 100000;
    double injection_fraction = 0.001;
};

struct ScanConfig {
    std::vector<double> efficiencies = {0.01, 0.02, 0.05, 0.1, 0.2, 0.3};
    int grid_n = 20;
    double grid_lo = 0.005;
    double grid_hi = 0.5;
    std::int64_t min_region_count = kMinScanRegionCount;
    std::int64_t min_background_count = 25;
};

struct TriggerConfig {
    double efficiency_axis1 = 0.05;
    double efficiency_axis2 = 0.05;
    std::int64_t prescale_ll = 1;
    std::int64_t prescale_lg = 1;
    std::int64_t prescale_gl = 1;
    bool auto_prescale = false;
    double safety_factor = 1.0;
};

/// Everything a run depends on, with one global seed.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    GeneratorConfig generator;
    DataConfig data;
    std::vector<int> encoder_widths = kDefaultEncoderWidths;
    bool exempt_padding = false;
    TrainConfig train;
    ScanConfig scan;
    TriggerConfig trigger;

    /// Throws ConfigError for inconsistent settings.
    void validate() const;
    /// Fully resolved JSON document.
    std::string to_json() const;
    /// Keys absent from `text` keep their defaults; unknown keys throw ConfigError.
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

/// Independent stream seed for a named purpose ("train", "eval", ...).
std::uint64_t derive_seed(std::uint64_t seed, const std::string& stream);

/// Fits standardization on `train`, trains a dual model and attaches the stats.
TrainResult fit_dual(const Dataset& train, const Dataset& test, const ExperimentConfig& config,
                     const EpochCallback& on_epoch = {});

/// Baseline single autoencoder; stats are returned through `stats`.
SingleTrainResult fit_single(const Dataset& train, const Dataset& test, const ExperimentConfig& config,
                             StandardizationStats& stats, const EpochCallback& on_epoch = {});

/// (R1, R2) for every event, standardized with the model's stats when present.
/// Labels are copied when the dataset has them.
ScoredSample score(const DualAutoencoder& model, const Dataset& data);

/// Reconstruction error of one autoencoder with optional standardization.
ScoreVector score(const Autoencoder& ae, const StandardizationStats* stats, const Dataset& data);

}  // namespace dae
