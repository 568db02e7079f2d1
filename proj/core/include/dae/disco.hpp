#pragma once

#include <span>
#include <vector>

namespace dae {

/// Per-event scores of one batch, e.g. reconstruction errors.
using ScoreVector = std::vector<double>;

/// Sample distance correlation (V-statistic) of two equally long score
/// vectors, clamped to [0, 1].
///
/// Uses the double-centred distance matrices A and B of u and v without
/// materialising them: with a_jk = |u_j - u_k|, row means a_j and grand mean
/// a, mean(A o B) = mean(a o b) - 2 mean_j(a_j b_j) + a b. Cost is O(n^2)
/// time and O(n) memory.
///
/// Throws ContractError on length mismatch or n < 2 and DegenerateInputError
/// when either argument is constant.
double distance_correlation(std::span<const double> u, std::span<const double> v);

struct DiscoGradient {
    double value = 0.0;      // dCorr^2
    std::vector<double> du;  // d value / d u_i
    std::vector<double> dv;  // d value / d v_i
};

/// dCorr^2 together with its exact partial derivatives. Same error contract
/// as distance_correlation.
DiscoGradient disco_squared_with_gradient(std::span<const double> u, std::span<const double> v);

}  // namespace dae
