#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace dae {

/// One working point. For single-score curves `threshold` is the score cut
/// (events strictly above pass); for combined diagonal curves it is the
/// per-axis background efficiency and c1/c2 hold the score cuts.
struct CurveRow {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
    double sic = 0.0;
    std::int64_t n_background_pass = 0;
    bool flagged = false;
    double c1 = 0.0;
    double c2 = 0.0;
};

enum class CurveKind { single_score, diagonal };

/// Rows ordered from the tightest to the loosest selection, so FPR and TPR
/// are non-decreasing down the table.
struct CurveTable {
    CurveKind kind = CurveKind::single_score;
    std::vector<CurveRow> rows;

    void write_csv(const std::filesystem::path& path) const;
};

struct CurveSummary {
    bool valid = false;  // false when every row is flagged
    double max_sic = 0.0;
    double threshold_at_max = 0.0;
    double fpr_at_max = 0.0;
    double tpr_at_max = 0.0;
    std::size_t flagged_rows = 0;

    /// {"max_sic": ..., "threshold_at_max": ..., "fpr_at_max": ..., "tpr_at_max": ..., "flagged_rows": ...}
    std::string to_json() const;
};

inline constexpr std::int64_t kMinBackgroundCount = 25;

/// Sweep over every distinct observed score, plus a final cut below all
/// scores that passes everything. FPR/TPR are the fractions strictly above
/// the cut. SIC is left at 0 until sic() is applied. Throws DataError for
/// empty input.
CurveTable roc(std::span<const double> background, std::span<const double> signal);

/// Fills SIC = TPR / sqrt(FPR); rows with fewer than `min_background_count`
/// background events passing (including FPR = 0) are flagged, SIC NaN.
CurveTable sic(CurveTable curve, std::int64_t min_background_count = kMinBackgroundCount);

/// Maximum SIC over unflagged rows.
CurveSummary summarize(const CurveTable& curve);

/// Diagonal AND of both cuts at every per-axis background efficiency in
/// `efficiencies` (thresholds from the background scores). SIC and flags
/// are filled as in sic().
CurveTable combined_diagonal_sic(std::span<const double> r1_background, std::span<const double> r1_signal,
                                 std::span<const double> r2_background, std::span<const double> r2_signal,
                                 std::span<const double> efficiencies,
                                 std::int64_t min_background_count = kMinBackgroundCount);

/// n log-spaced values in [lo, hi].
std::vector<double> log_space(double lo, double hi, int n);

}  // namespace dae
