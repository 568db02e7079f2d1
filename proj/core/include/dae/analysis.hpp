#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dae/abcd.hpp"
#include "dae/experiment.hpp"
#include "dae/metrics.hpp"

namespace dae {

/// Sensitivity to one anomaly class.
struct ClassEvaluation {
    std::uint16_t label = 0;
    std::size_t n_signal = 0;
    CurveTable roc_ae1;
    CurveTable roc_ae2;
    CurveTable combined;
    CurveSummary ae1;
    CurveSummary ae2;
    CurveSummary combined_summary;
    /// Diagonal scan on background plus this class only.
    ScanTable significance;
    double max_significance_uncorrected = 0.0;  // over unflagged rows
    double max_significance_corrected = 0.0;
};

struct Evaluation {
    std::size_t n_background = 0;
    double background_dcorr = 0.0;  // on at most kDcorrSubsample background events
    /// Diagonal scan on background events only.
    ScanTable closure;
    std::vector<ClassEvaluation> classes;

    /// Largest |closure ratio - 1| over unflagged rows with per-axis efficiency >= min_efficiency.
    double max_closure_deviation(double min_efficiency) const;
    /// Largest uncorrected significance of the background-only sample.
    double max_background_significance() const;
    std::string to_json() const;
};

inline constexpr std::size_t kDcorrSubsample = 20000;

/// Closure on the background rows and, for every signal label present,
/// ROC/SIC of each autoencoder, the combined diagonal SIC and a diagonal
/// significance scan. Throws DataError without labels or background rows.
Evaluation evaluate(const ScoredSample& sample, const ScanConfig& scan);

}  // namespace dae
