#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dae/autoencoder.hpp"

namespace dae {

struct CheckpointMetadata {
    std::vector<int> layer_sizes;  // encoder widths from input to latent, e.g. 72,256,128,64,32,5
    Activation hidden = Activation::relu;
    Activation latent = Activation::linear;
    Activation output = Activation::linear;
    int input_dim = 0;
    int loss_power = 1;
    double lambda = 0.0;
    std::uint64_t seed = 0;
};

/// One (single-autoencoder baseline) or two autoencoders plus the input
/// standardization they were trained with.
struct Checkpoint {
    CheckpointMetadata metadata;
    std::vector<Autoencoder> autoencoders;
    std::optional<StandardizationStats> stats;

    static Checkpoint from_dual(const DualAutoencoder& model, const TrainConfig& config);
    static Checkpoint from_single(const Autoencoder& model, const std::optional<StandardizationStats>& stats,
                                  const TrainConfig& config);
    /// Throws ContractError unless the checkpoint holds two autoencoders.
    DualAutoencoder to_dual() const;
};

/// DAE1 layout: "DAE1", u32 little-endian metadata length, metadata as
/// sorted "key=value\n" lines, then every parameter as a little-endian f64
/// in layer order (weights row-major, then bias), encoder before decoder,
/// autoencoder 1 before autoencoder 2.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws FormatError with the byte offset of the first inconsistency.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Canonical key-value text used for the metadata block.
std::string encode_metadata(const std::map<std::string, std::string>& entries);
std::map<std::string, std::string> decode_metadata(const std::string& text, std::uint64_t base_offset);

}  // namespace dae
