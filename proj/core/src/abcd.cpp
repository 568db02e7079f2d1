#include "dae/abcd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "dae/csv.hpp"
#include "dae/error.hpp"

namespace dae {

const char* to_string(Region r) {
    switch (r) {
        case Region::ll: return "ll";
        case Region::lg: return "lg";
        case Region::gl: return "gl";
        case Region::gg: return "gg";
    }
    return "?";
}

std::int64_t& RegionCounts::operator[](Region r) {
    switch (r) {
        case Region::ll: return n_ll;
        case Region::lg: return n_lg;
        case Region::gl: return n_gl;
        case Region::gg: return n_gg;
    }
    return n_ll;
}

std::int64_t RegionCounts::operator[](Region r) const {
    return const_cast<RegionCounts&>(*this)[r];
}

RegionCounts count_regions(std::span<const double> r1, std::span<const double> r2, const Thresholds& c) {
    if (r1.size() != r2.size())
        throw ContractError("score vectors differ in length: " + std::to_string(r1.size()) + " vs " +
                            std::to_string(r2.size()));
    std::int64_t n[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < r1.size(); ++i) ++n[static_cast<int>(classify(r1[i], r2[i], c))];
    return RegionCounts{n[0], n[1], n[2], n[3]};
}

double abcd_prediction(const RegionCounts& counts) {
    if (counts.n_ll <= 0) throw UndefinedPredictionError("ABCD prediction undefined: the (<,<) region is empty");
    return static_cast<double>(counts.n_gl) * static_cast<double>(counts.n_lg) / static_cast<double>(counts.n_ll);
}

double significance(std::int64_t n_observed, double b_predicted) {
    const double n = static_cast<double>(n_observed);
    if (n_observed <= 0 || !(n > b_predicted)) return 0.0;
    return (n - b_predicted) / std::sqrt(n);
}

double quantile_threshold(std::span<const double> scores, double efficiency) {
    if (scores.empty()) throw DataError("cannot take a quantile of an empty score vector");
    if (!(efficiency > 0.0 && efficiency < 1.0)) throw ContractError("efficiency must lie strictly between 0 and 1");
    const double n = static_cast<double>(scores.size());
    const double x = (1.0 - efficiency) * n;
    // (1 - eps) * n is often an integer that rounding pushed just above itself.
    const double nearest = std::round(x);
    double k = std::abs(x - nearest) <= 1e-9 * std::max(1.0, n) ? nearest : std::ceil(x);
    k = std::clamp(k, 1.0, n);
    std::vector<double> sorted(scores.begin(), scores.end());
    const auto kth = sorted.begin() + static_cast<std::ptrdiff_t>(k) - 1;
    std::nth_element(sorted.begin(), kth, sorted.end());
    return *kth;
}

Thresholds diagonal_thresholds(std::span<const double> r1_background, std::span<const double> r2_background,
                               double per_axis_efficiency) {
    return axis_thresholds(r1_background, r2_background, per_axis_efficiency, per_axis_efficiency);
}

Thresholds axis_thresholds(std::span<const double> r1_background, std::span<const double> r2_background,
                           double efficiency1, double efficiency2) {
    return Thresholds{quantile_threshold(r1_background, efficiency1), quantile_threshold(r2_background, efficiency2)};
}

void ScoredSample::validate() const {
    if (r1.size() != r2.size()) throw ContractError("score vectors differ in length");
    if (!labels.empty() && labels.size() != r1.size()) throw ContractError("label count does not match score count");
}

ScoredSample ScoredSample::background() const {
    validate();
    if (!labelled()) return *this;
    ScoredSample out;
    for (std::size_t i = 0; i < size(); ++i)
        if (labels[i] == 0) {
            out.r1.push_back(r1[i]);
            out.r2.push_back(r2[i]);
            out.labels.push_back(0);
        }
    return out;
}

ScoredSample ScoredSample::signal(std::optional<std::uint16_t> label) const {
    validate();
    ScoredSample out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != 0 && (!label || labels[i] == *label)) {
            out.r1.push_back(r1[i]);
            out.r2.push_back(r2[i]);
            out.labels.push_back(labels[i]);
        }
    return out;
}

void ScoredSample::write_csv(const std::filesystem::path& path) const {
    validate();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << (labelled() ? "r1,r2,label\n" : "r1,r2\n");
    for (std::size_t i = 0; i < size(); ++i) {
        out << format_double(r1[i]) << ',' << format_double(r2[i]);
        if (labelled()) out << ',' << labels[i];
        out << '\n';
    }
}

ScoredSample ScoredSample::read_csv(const std::filesystem::path& path) {
    const CsvTable table = dae::read_csv(path);
    const std::size_t c1 = table.column("r1");
    const std::size_t c2 = table.column("r2");
    const bool labelled = std::find(table.header.begin(), table.header.end(), "label") != table.header.end();
    const std::size_t cl = labelled ? table.column("label") : 0;
    ScoredSample s;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size()) throw DataError("score CSV row " + std::to_string(r + 2) + " is malformed");
        s.r1.push_back(parse_double(row[c1], r + 2));
        s.r2.push_back(parse_double(row[c2], r + 2));
        if (labelled) s.labels.push_back(static_cast<std::uint16_t>(parse_double(row[cl], r + 2)));
    }
    return s;
}

namespace {

std::int64_t background_in_sr(const ScoredSample& sample, const Thresholds& c) {
    std::int64_t n = 0;
    for (std::size_t i = 0; i < sample.size(); ++i)
        if (sample.labels[i] == 0 && classify(sample.r1[i], sample.r2[i], c) == Region::gg) ++n;
    return n;
}

}  // namespace

AbcdReport abcd_report(const ScoredSample& sample, const Thresholds& c, std::optional<std::int64_t> true_background_sr) {
    sample.validate();
    AbcdReport report;
    report.counts = count_regions(sample.r1, sample.r2, c);
    report.observed_sr = report.counts.n_gg;
    report.predicted_sr = abcd_prediction(report.counts);
    report.significance_uncorrected = significance(report.observed_sr, report.predicted_sr);
    if (!true_background_sr && sample.labelled()) true_background_sr = background_in_sr(sample, c);
    if (true_background_sr) {
        report.true_background_sr = true_background_sr;
        report.significance_corrected = significance(report.observed_sr, static_cast<double>(*true_background_sr));
        if (*true_background_sr > 0) report.closure_ratio = report.predicted_sr / static_cast<double>(*true_background_sr);
    }
    return report;
}

void ScanTable::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << "eff_axis1,eff_axis2,c1,c2,bg_eff_combined,sig_eff,sic,closure_ratio,sig_uncorr,sig_corr,flagged\n";
    for (const auto& r : rows)
        out << format_double(r.eff_axis1) << ',' << format_double(r.eff_axis2) << ',' << format_double(r.c1) << ','
            << format_double(r.c2) << ',' << format_double(r.bg_eff_combined) << ',' << format_double(r.sig_eff) << ','
            << format_double(r.sic) << ',' << format_double(r.closure_ratio) << ',' << format_double(r.sig_uncorr)
            << ',' << format_double(r.sig_corr) << ',' << (r.flagged ? 1 : 0) << '\n';
}

ScanTable threshold_scan(const ScoredSample& sample, std::span<const std::pair<double, double>> grid,
                         std::int64_t min_region_count) {
    sample.validate();
    if (grid.empty()) throw ContractError("threshold scan needs a non-empty grid");
    const ScoredSample bg = sample.background();
    const ScoredSample sig = sample.signal();
    if (bg.size() == 0) throw DataError("threshold scan needs background events");
    const double nan = std::numeric_limits<double>::quiet_NaN();

    ScanTable table;
    for (const auto& [e1, e2] : grid) {
        ScanRow row;
        row.eff_axis1 = e1;
        row.eff_axis2 = e2;
        const Thresholds c = axis_thresholds(bg.r1, bg.r2, e1, e2);
        row.c1 = c.c1;
        row.c2 = c.c2;
        row.counts = count_regions(sample.r1, sample.r2, c);
        row.background_counts = count_regions(bg.r1, bg.r2, c);
        const auto& b = row.background_counts;
        row.bg_eff_combined = static_cast<double>(b.n_gg) / static_cast<double>(bg.size());
        row.sig_eff = sig.size() ? static_cast<double>(count_regions(sig.r1, sig.r2, c).n_gg) / static_cast<double>(sig.size())
                                 : nan;
        row.flagged = std::min({b.n_ll, b.n_lg, b.n_gl, b.n_gg}) < std::max<std::int64_t>(min_region_count, 1);
        if (row.flagged) {
            row.sic = row.closure_ratio = row.sig_uncorr = row.sig_corr = nan;
        } else {
            const double predicted = abcd_prediction(row.counts);
            row.sic = sig.size() ? row.sig_eff / std::sqrt(row.bg_eff_combined) : nan;
            row.closure_ratio = predicted / static_cast<double>(b.n_gg);
            row.sig_uncorr = significance(row.counts.n_gg, predicted);
            row.sig_corr = significance(row.counts.n_gg, static_cast<double>(b.n_gg));
        }
        table.rows.push_back(row);
    }
    return table;
}

std::vector<std::pair<double, double>> diagonal_grid(std::span<const double> efficiencies) {
    std::vector<std::pair<double, double>> grid;
    for (double e : efficiencies) grid.emplace_back(e, e);
    return grid;
}

std::vector<std::pair<double, double>> log_grid(int n1, int n2, double lo, double hi) {
    if (n1 < 1 || n2 < 1 || !(lo > 0.0) || !(hi < 1.0) || !(lo <= hi)) throw ConfigError("invalid efficiency grid");
    auto axis = [&](int n) {
        std::vector<double> v;
        for (int i = 0; i < n; ++i)
            v.push_back(n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
        return v;
    };
    std::vector<std::pair<double, double>> grid;
    for (double a : axis(n1))
        for (double b : axis(n2)) grid.emplace_back(a, b);
    return grid;
}

std::vector<std::pair<double, double>> iso_efficiency_grid(double target, std::span<const double> axis1) {
    std::vector<std::pair<double, double>> grid;
    for (double e1 : axis1) {
        const double e2 = target / e1;
        if (e1 > 0.0 && e1 < 1.0 && e2 > 0.0 && e2 < 1.0) grid.emplace_back(e1, e2);
    }
    return grid;
}

}  // namespace dae
