#include "dae/disco.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dae/error.hpp"

namespace dae {

namespace {

constexpr double kDenominatorFloor = 1e-24;

inline double sign(double x) {
    return static_cast<double>((x > 0.0) - (x < 0.0));
}

void validate(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw ContractError("distance correlation needs equal lengths, got " + std::to_string(u.size()) + " and " +
                            std::to_string(v.size()));
    if (u.size() < 2) throw ContractError("distance correlation needs at least two entries");
    auto constant = [](std::span<const double> x) {
        return std::all_of(x.begin(), x.end(), [&](double e) { return e == x.front(); });
    };
    if (constant(u) || constant(v)) throw DegenerateInputError("distance correlation of a constant vector");
    for (std::size_t i = 0; i < u.size(); ++i)
        if (!std::isfinite(u[i]) || !std::isfinite(v[i])) throw DataError("non-finite score in distance correlation");
}

// Row means of the distance matrices and the three moments entering
// dCov^2(u,v), dVar^2(u), dVar^2(v).
struct Moments {
    std::vector<double> row_a, row_b;  // a_j., b_j.
    double grand_a = 0.0, grand_b = 0.0;
    double cov = 0.0, var_u = 0.0, var_v = 0.0;
};

Moments moments(std::span<const double> u, std::span<const double> v) {
    const std::size_t n = u.size();
    const double* up = u.data();
    const double* vp = v.data();
    Moments m;
    m.row_a.resize(n);
    m.row_b.resize(n);
    double s_ab = 0.0, s_aa = 0.0, s_bb = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double uj = up[j], vj = vp[j];
        double ra = 0.0, rb = 0.0, ab = 0.0, aa = 0.0, bb = 0.0;
#pragma omp simd reduction(+ : ra, rb, ab, aa, bb)
        for (std::size_t k = 0; k < n; ++k) {
            const double a = std::abs(uj - up[k]);
            const double b = std::abs(vj - vp[k]);
            ra += a;
            rb += b;
            ab += a * b;
            aa += a * a;
            bb += b * b;
        }
        m.row_a[j] = ra;
        m.row_b[j] = rb;
        s_ab += ab;
        s_aa += aa;
        s_bb += bb;
    }
    const double dn = static_cast<double>(n);
    double sum_a = 0.0, sum_b = 0.0, cross_ab = 0.0, cross_aa = 0.0, cross_bb = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        m.row_a[j] /= dn;
        m.row_b[j] /= dn;
        sum_a += m.row_a[j];
        sum_b += m.row_b[j];
        cross_ab += m.row_a[j] * m.row_b[j];
        cross_aa += m.row_a[j] * m.row_a[j];
        cross_bb += m.row_b[j] * m.row_b[j];
    }
    m.grand_a = sum_a / dn;
    m.grand_b = sum_b / dn;
    const double n2 = dn * dn;
    m.cov = s_ab / n2 - 2.0 * cross_ab / dn + m.grand_a * m.grand_b;
    m.var_u = s_aa / n2 - 2.0 * cross_aa / dn + m.grand_a * m.grand_a;
    m.var_v = s_bb / n2 - 2.0 * cross_bb / dn + m.grand_b * m.grand_b;
    return m;
}

double squared_ratio(const Moments& m) {
    return m.cov / std::sqrt(std::max(m.var_u * m.var_v, kDenominatorFloor));
}

}  // namespace

double distance_correlation(std::span<const double> u, std::span<const double> v) {
    validate(u, v);
    const Moments m = moments(u, v);
    return std::sqrt(std::clamp(squared_ratio(m), 0.0, 1.0));
}

DiscoGradient disco_squared_with_gradient(std::span<const double> u, std::span<const double> v) {
    validate(u, v);
    const std::size_t n = u.size();
    const Moments m = moments(u, v);
    const double ratio = squared_ratio(m);
    const double product = m.var_u * m.var_v;
    const bool floored = product < kDenominatorFloor;
    const double denom = std::sqrt(std::max(product, kDenominatorFloor));

    DiscoGradient out;
    out.value = std::clamp(ratio, 0.0, 1.0);
    out.du.resize(n);
    out.dv.resize(n);

    const double dn = static_cast<double>(n);
    const double scale = 2.0 / (dn * dn);
    double sum_u = 0.0, sum_v = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sum_u += u[k];
        sum_v += v[k];
    }

    const double* up = u.data();
    const double* vp = v.data();
    const double* ra = m.row_a.data();
    const double* rb = m.row_b.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double ui = up[i], vi = vp[i];
        // s = sign(u_i - u_k), t = sign(v_i - v_k)
        double bs = 0.0, s_sum = 0.0, s_rb = 0.0, s_ra = 0.0;
        double at = 0.0, t_sum = 0.0, t_ra = 0.0, t_rb = 0.0;
#pragma omp simd reduction(+ : bs, s_sum, s_rb, s_ra, at, t_sum, t_ra, t_rb)
        for (std::size_t k = 0; k < n; ++k) {
            const double du = ui - up[k];
            const double dv = vi - vp[k];
            const double s = sign(du);
            const double t = sign(dv);
            bs += std::abs(dv) * s;
            s_sum += s;
            s_rb += s * rb[k];
            s_ra += s * ra[k];
            at += std::abs(du) * t;
            t_sum += t;
            t_ra += t * ra[k];
            t_rb += t * rb[k];
        }
        // sum_k a_ik s_ik collapses to n u_i - sum(u).
        const double as = dn * ui - sum_u;
        const double bt = dn * vi - sum_v;

        const double dcov_du = scale * (bs - rb[i] * s_sum - s_rb + m.grand_b * s_sum);
        const double dvar_u = 2.0 * scale * (as - ra[i] * s_sum - s_ra + m.grand_a * s_sum);
        const double dcov_dv = scale * (at - ra[i] * t_sum - t_ra + m.grand_a * t_sum);
        const double dvar_v = 2.0 * scale * (bt - rb[i] * t_sum - t_rb + m.grand_b * t_sum);

        if (floored) {
            out.du[i] = dcov_du / denom;
            out.dv[i] = dcov_dv / denom;
        } else {
            out.du[i] = dcov_du / denom - ratio * dvar_u / (2.0 * m.var_u);
            out.dv[i] = dcov_dv / denom - ratio * dvar_v / (2.0 * m.var_v);
        }
    }
    return out;
}

}  // namespace dae
