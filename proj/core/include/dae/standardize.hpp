#pragma once

#include <vector>

#include "dae/events.hpp"

namespace dae {

inline constexpr double kStdFloor = 1e-6;

/// Per-feature z-scaling fitted on a training split.
struct StandardizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // already floored at kStdFloor
    /// When set, object slots with pT == 0 (padding) are left at zero and
    /// excluded from the fit.
    bool exempt_padding = false;
    int features_per_object = 4;

    std::size_t size() const { return mean.size(); }
};

/// Throws DataError on an empty dataset.
StandardizationStats fit_standardization(const Dataset& train, bool exempt_padding = false);

/// (x - mean) / std per feature. Throws ContractError when the feature count differs.
EventMatrix apply_standardization(const EventMatrix& events, const StandardizationStats& stats);
Dataset apply_standardization(const Dataset& data, const StandardizationStats& stats);

}  // namespace dae
