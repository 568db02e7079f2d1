#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dae/disco.hpp"

namespace dae {

struct Thresholds {
    double c1 = 0.0;
    double c2 = 0.0;
};

/// Quadrant of the (R1, R2) plane. First letter: R1 vs c1, second: R2 vs c2;
/// l means "<=" (ties fail the cut), g means ">". gg is the signal region.
enum class Region : std::uint8_t { ll = 0, lg = 1, gl = 2, gg = 3 };

const char* to_string(Region r);

inline Region classify(double r1, double r2, const Thresholds& c) {
    const int high1 = r1 > c.c1 ? 1 : 0;
    const int high2 = r2 > c.c2 ? 1 : 0;
    return static_cast<Region>(2 * high1 + high2);
}

struct RegionCounts {
    std::int64_t n_ll = 0;
    std::int64_t n_lg = 0;
    std::int64_t n_gl = 0;
    std::int64_t n_gg = 0;

    std::int64_t total() const { return n_ll + n_lg + n_gl + n_gg; }
    std::int64_t& operator[](Region r);
    std::int64_t operator[](Region r) const;
    bool operator==(const RegionCounts&) const = default;
};

/// Throws ContractError on length mismatch.
RegionCounts count_regions(std::span<const double> r1, std::span<const double> r2, const Thresholds& c);

/// N_gl * N_lg / N_ll. Throws UndefinedPredictionError when N_ll == 0.
double abcd_prediction(const RegionCounts& counts);

/// (N - B) / sqrt(N) when N > B and N > 0, otherwise 0.
double significance(std::int64_t n_observed, double b_predicted);

/// Threshold passing `efficiency` of `scores`: the k-th order statistic with
/// k = ceil((1 - efficiency) * n). Throws DataError on empty input and
/// ContractError unless 0 < efficiency < 1.
double quantile_threshold(std::span<const double> scores, double efficiency);

/// Per-axis thresholds giving the same background efficiency on each axis.
Thresholds diagonal_thresholds(std::span<const double> r1_background, std::span<const double> r2_background,
                               double per_axis_efficiency);

/// Thresholds with independent per-axis background efficiencies.
Thresholds axis_thresholds(std::span<const double> r1_background, std::span<const double> r2_background,
                           double efficiency1, double efficiency2);

/// Scores of an evaluation sample. Label 0 is background, anything else signal;
/// an empty label vector means unlabelled data.
struct ScoredSample {
    ScoreVector r1;
    ScoreVector r2;
    std::vector<std::uint16_t> labels;

    std::size_t size() const { return r1.size(); }
    bool labelled() const { return !labels.empty(); }
    /// Throws ContractError on inconsistent lengths.
    void validate() const;
    /// Events with label 0 (all events when unlabelled).
    ScoredSample background() const;
    /// Events with label != 0; optionally only one class.
    ScoredSample signal(std::optional<std::uint16_t> label = std::nullopt) const;

    void write_csv(const std::filesystem::path& path) const;
    static ScoredSample read_csv(const std::filesystem::path& path);
};

struct AbcdReport {
    RegionCounts counts;
    std::int64_t observed_sr = 0;
    double predicted_sr = 0.0;
    std::optional<std::int64_t> true_background_sr;
    std::optional<double> closure_ratio;  // predicted / true background in the SR
    double significance_uncorrected = 0.0;
    std::optional<double> significance_corrected;
};

/// ABCD prediction on the full (possibly contaminated) sample. The true
/// background count in the signal region comes from `true_background_sr`
/// when given, otherwise from the labels when present.
AbcdReport abcd_report(const ScoredSample& sample, const Thresholds& c,
                       std::optional<std::int64_t> true_background_sr = std::nullopt);

struct ScanRow {
    double eff_axis1 = 0.0;
    double eff_axis2 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double bg_eff_combined = 0.0;
    double sig_eff = 0.0;
    double sic = 0.0;
    double closure_ratio = 0.0;
    double sig_uncorr = 0.0;
    double sig_corr = 0.0;
    bool flagged = false;
    RegionCounts counts;             // all events
    RegionCounts background_counts;  // label-0 events
};

struct ScanTable {
    std::vector<ScanRow> rows;

    /// Columns: eff_axis1, eff_axis2, c1, c2, bg_eff_combined, sig_eff, sic,
    /// closure_ratio, sig_uncorr, sig_corr, flagged.
    void write_csv(const std::filesystem::path& path) const;
};

inline constexpr std::int64_t kMinScanRegionCount = 10;

/// For every (eff1, eff2) cell: thresholds from the background scores, region
/// counts, ABCD prediction, closure and significances. Cells with fewer than
/// `min_region_count` background events in any region are flagged and their
/// derived quantities left as NaN. Throws ContractError for an empty grid.
ScanTable threshold_scan(const ScoredSample& sample, std::span<const std::pair<double, double>> grid,
                         std::int64_t min_region_count = kMinScanRegionCount);

/// Cells (e, e) for every e in `efficiencies`.
std::vector<std::pair<double, double>> diagonal_grid(std::span<const double> efficiencies);
/// n1 x n2 cells with log-spaced per-axis efficiencies in [lo, hi].
std::vector<std::pair<double, double>> log_grid(int n1, int n2, double lo, double hi);
/// Pairs (e1, target / e1) yielding the same product efficiency `target`
/// for each e1 in `axis1` with target / e1 < 1.
std::vector<std::pair<double, double>> iso_efficiency_grid(double target, std::span<const double> axis1);

}  // namespace dae
