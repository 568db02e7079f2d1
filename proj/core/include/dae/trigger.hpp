#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dae/abcd.hpp"

namespace dae {

/// Online selection: every signal-region event is kept; events in the three
/// support regions are kept with probability 1/P and weight P.
struct PrescaleConfig {
    std::int64_t prescale_ll = 1;
    std::int64_t prescale_lg = 1;
    std::int64_t prescale_gl = 1;
    Thresholds thresholds;
    std::uint64_t seed = 0;

    /// 1 for the signal region.
    std::int64_t prescale(Region r) const;
    /// Throws ConfigError for prescales below 1 or non-finite thresholds.
    void validate() const;

    static PrescaleConfig shared(std::int64_t prescale, Thresholds thresholds, std::uint64_t seed);
};

struct TriggerDecision {
    bool keep = false;
    Region region = Region::ll;
    std::int64_t weight = 0;  // prescale of the region when kept, 0 when dropped
};

/// Decision for one event; advances `rng` only for support-region events with P > 1.
TriggerDecision stream_decide(double r1, double r2, const PrescaleConfig& config, std::mt19937_64& rng);

struct KeptEvent {
    std::uint64_t index = 0;
    Region region = Region::ll;
    std::int64_t weight = 1;
};

struct TriggerOutput {
    PrescaleConfig config;
    std::array<std::int64_t, 4> seen{};  // indexed by Region
    std::array<std::int64_t, 4> kept{};
    std::vector<KeptEvent> events;

    std::int64_t total_seen() const;
    std::int64_t total_kept() const;
    double kept_fraction() const;
    /// Sum of weights of kept events per region.
    RegionCounts weighted_counts() const;
    /// JSON ledger: per-region seen/kept counts, prescales, thresholds, seed.
    std::string ledger_json() const;
};

/// Sequential consumer with an explicit random state. The state can be
/// saved and restored as text to resume a stream.
class TriggerStream {
public:
    explicit TriggerStream(PrescaleConfig config);

    TriggerDecision process(double r1, double r2);
    const TriggerOutput& output() const { return output_; }

    std::string rng_state() const;
    void restore_rng_state(const std::string& state);

private:
    std::mt19937_64 rng_;
    TriggerOutput output_;
    std::uint64_t next_index_ = 0;
};

TriggerOutput run_trigger(std::span<const double> r1, std::span<const double> r2, const PrescaleConfig& config);

/// Background efficiency of each region (fractions of all events).
struct RegionEfficiencies {
    double ll = 0.0;
    double lg = 0.0;
    double gl = 0.0;
    double gg = 0.0;
};

/// Expected kept fraction: eps_gg + eps_ll / P_ll + eps_lg / P_lg + eps_gl / P_gl.
double estimate_rate(const RegionEfficiencies& efficiencies, const PrescaleConfig& config);
/// Same with efficiency `eps` in every region; equals 4 eps without prescaling.
double estimate_rate(double eps, const PrescaleConfig& config);

struct PrescaleChoice {
    PrescaleConfig config;
    bool infeasible = false;
    double prediction_rel_variance = 0.0;  // sum_r P_r / N_r
    double bound = 0.0;                    // 1 / (N_sr * safety_factor)
};

/// Largest integer prescales whose weighted ABCD prediction keeps a relative
/// variance sum_r P_r / N_r within the signal-region Poisson relative
/// variance 1 / N_sr divided by `safety_factor`. The budget is split evenly
/// across regions and leftover slack is handed out greedily. When even
/// P = 1 everywhere violates the bound, all prescales are 1 and `infeasible`
/// is set. Throws ConfigError for non-positive counts or safety factor.
PrescaleChoice choose_prescales(double expected_sr, double expected_ll, double expected_lg, double expected_gl,
                                double safety_factor, Thresholds thresholds = {}, std::uint64_t seed = 0);

/// ABCD on weighted counts of a prescaled stream. Throws
/// UndefinedPredictionError when any support region kept no event.
AbcdReport offline_abcd_from_stream(const TriggerOutput& output,
                                    std::optional<std::int64_t> true_background_sr = std::nullopt);

}  // namespace dae
