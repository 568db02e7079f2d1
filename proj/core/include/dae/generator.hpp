#pragma once

#include <cstdint>
#include <string>

#include "dae/events.hpp"

namespace dae {

/// Shape of one object category in the synthetic generator.
struct CategoryConfig {
    double mean_multiplicity = 1.0;  // Poisson mean before truncation at the slot count
    double pt_floor = 20.0;          // pT = pt_floor + Gamma(pt_shape, pt_scale)
    double pt_shape = 2.0;
    double pt_scale = 15.0;
    double eta_sigma = 1.5;  // normal, truncated to [-eta_max, eta_max]
    double mass = 0.0;       // m = mass + |N(0, mass_noise)|
    double mass_noise = 0.0;
};

/// Synthetic collider-like event generator. Units are abstract GeV-like numbers.
struct GeneratorConfig {
    EventLayout layout;
    CategoryConfig muons{1.2, 23.0, 2.0, 12.0, 1.2, 0.106, 0.0};
    CategoryConfig electrons{1.1, 23.0, 2.0, 12.0, 1.4, 0.000511, 0.0};
    CategoryConfig jets{3.5, 25.0, 1.5, 25.0, 2.0, 8.0, 3.0};
    double eta_max = 4.0;
    bool require_lepton = true;

    // extra-lepton class: raised lepton multiplicities
    double extra_lepton_mean_muons = 2.2;
    double extra_lepton_mean_electrons = 2.0;
    // hard-object class: additive pT shift applied to every object
    double hard_pt_shift = 40.0;
    // correlated-pair class: two extra jets with correlated pT, eta and back-to-back phi
    double pair_pt_floor = 30.0;
    double pair_pt_shape = 3.0;
    double pair_pt_scale = 15.0;
    double pair_pt_spread = 0.05;  // relative
    double pair_eta_spread = 0.1;
    double pair_phi_spread = 0.1;
    double pair_mass = 1.8;

    /// Throws ConfigError for inconsistent settings.
    void validate() const;
};

enum class SignalKind : std::uint16_t { extra_lepton = 1, hard_object = 2, correlated_pair = 3 };

std::string to_string(SignalKind kind);
SignalKind signal_kind_from_string(const std::string& name);

/// Background events, labelled 0. Pure function of (n, seed, config).
Dataset generate_background(std::size_t n, std::uint64_t seed, const GeneratorConfig& config = {});

/// Anomalous events of one class, labelled with the class index.
Dataset generate_signal(std::size_t n, std::uint64_t seed, SignalKind kind, const GeneratorConfig& config = {});

/// Appends round(fraction * total / (1 - fraction)) signal rows to the
/// background and shuffles, so that the signal share of the result is
/// `fraction` up to rounding. Throws ContractError for different layouts or
/// fraction outside [0, 1) and DataError when the signal sample is too small.
Dataset inject_signal(const Dataset& background, const Dataset& signal, double fraction, std::uint64_t seed);

/// Number of signal rows inject_signal appends to `n_background` events.
std::size_t injected_count(std::size_t n_background, double fraction);

}  // namespace dae
