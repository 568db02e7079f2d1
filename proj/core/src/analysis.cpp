#include "dae/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "dae/disco.hpp"
#include "dae/error.hpp"

namespace dae {

namespace {

nlohmann::json finite_or_null(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

nlohmann::json scan_json(const ScanTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"eff_axis1", r.eff_axis1},
                        {"eff_axis2", r.eff_axis2},
                        {"closure_ratio", finite_or_null(r.closure_ratio)},
                        {"sig_uncorr", finite_or_null(r.sig_uncorr)},
                        {"sig_corr", finite_or_null(r.sig_corr)},
                        {"observed", r.counts.n_gg},
                        {"background", r.background_counts.n_gg},
                        {"flagged", r.flagged}});
    return rows;
}

}  // namespace

double Evaluation::max_closure_deviation(double min_efficiency) const {
    double worst = 0.0;
    for (const auto& r : closure.rows)
        if (!r.flagged && r.eff_axis1 >= min_efficiency && r.eff_axis2 >= min_efficiency)
            worst = std::max(worst, std::abs(r.closure_ratio - 1.0));
    return worst;
}

double Evaluation::max_background_significance() const {
    double worst = 0.0;
    for (const auto& r : closure.rows)
        if (!r.flagged) worst = std::max(worst, r.sig_uncorr);
    return worst;
}

std::string Evaluation::to_json() const {
    nlohmann::json j;
    j["n_background"] = n_background;
    j["background_dcorr"] = background_dcorr;
    j["closure"] = scan_json(closure);
    j["max_closure_deviation_eff_ge_0.05"] = max_closure_deviation(0.05);
    j["max_background_significance"] = max_background_significance();
    j["classes"] = nlohmann::json::array();
    for (const auto& c : classes)
        j["classes"].push_back({{"label", c.label},
                                {"n_signal", c.n_signal},
                                {"ae1", nlohmann::json::parse(c.ae1.to_json())},
                                {"ae2", nlohmann::json::parse(c.ae2.to_json())},
                                {"combined", nlohmann::json::parse(c.combined_summary.to_json())},
                                {"significance", scan_json(c.significance)},
                                {"max_significance_uncorrected", c.max_significance_uncorrected},
                                {"max_significance_corrected", c.max_significance_corrected}});
    return j.dump(2);
}

Evaluation evaluate(const ScoredSample& sample, const ScanConfig& scan) {
    sample.validate();
    if (!sample.labelled()) throw DataError("evaluation needs labelled events");
    const ScoredSample bg = sample.background();
    if (bg.size() < 2) throw DataError("evaluation needs background events");
    const auto grid = diagonal_grid(scan.efficiencies);

    Evaluation e;
    e.n_background = bg.size();
    const std::size_t m = std::min(bg.size(), kDcorrSubsample);
    e.background_dcorr = distance_correlation(std::span(bg.r1).first(m), std::span(bg.r2).first(m));
    e.closure = threshold_scan(bg, grid, scan.min_region_count);

    std::set<std::uint16_t> labels(sample.labels.begin(), sample.labels.end());
    labels.erase(0);
    for (std::uint16_t label : labels) {
        const ScoredSample sig = sample.signal(label);
        ClassEvaluation c;
        c.label = label;
        c.n_signal = sig.size();
        c.roc_ae1 = sic(roc(bg.r1, sig.r1), scan.min_background_count);
        c.roc_ae2 = sic(roc(bg.r2, sig.r2), scan.min_background_count);
        c.combined = combined_diagonal_sic(bg.r1, sig.r1, bg.r2, sig.r2, scan.efficiencies, scan.min_background_count);
        c.ae1 = summarize(c.roc_ae1);
        c.ae2 = summarize(c.roc_ae2);
        c.combined_summary = summarize(c.combined);

        ScoredSample mix = bg;
        mix.r1.insert(mix.r1.end(), sig.r1.begin(), sig.r1.end());
        mix.r2.insert(mix.r2.end(), sig.r2.begin(), sig.r2.end());
        mix.labels.insert(mix.labels.end(), sig.labels.begin(), sig.labels.end());
        c.significance = threshold_scan(mix, grid, scan.min_region_count);
        for (const auto& r : c.significance.rows)
            if (!r.flagged) {
                c.max_significance_uncorrected = std::max(c.max_significance_uncorrected, r.sig_uncorr);
                c.max_significance_corrected = std::max(c.max_significance_corrected, r.sig_corr);
            }
        e.classes.push_back(std::move(c));
    }
    return e;
}

}  // namespace dae
