#include "dae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include <nlohmann/json.hpp>

#include "dae/abcd.hpp"
#include "dae/csv.hpp"
#include "dae/error.hpp"

namespace dae {

void CurveTable::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    if (kind == CurveKind::single_score) {
        out << "threshold,fpr,tpr,sic,n_bg_pass,flagged\n";
        for (const auto& r : rows)
            out << format_double(r.threshold) << ',' << format_double(r.fpr) << ',' << format_double(r.tpr) << ','
                << format_double(r.sic) << ',' << r.n_background_pass << ',' << (r.flagged ? 1 : 0) << '\n';
    } else {
        out << "eff_axis,c1,c2,fpr,tpr,sic,n_bg_pass,flagged\n";
        for (const auto& r : rows)
            out << format_double(r.threshold) << ',' << format_double(r.c1) << ',' << format_double(r.c2) << ','
                << format_double(r.fpr) << ',' << format_double(r.tpr) << ',' << format_double(r.sic) << ','
                << r.n_background_pass << ',' << (r.flagged ? 1 : 0) << '\n';
    }
}

std::string CurveSummary::to_json() const {
    nlohmann::json j;
    j["valid"] = valid;
    j["max_sic"] = valid ? nlohmann::json(max_sic) : nlohmann::json(nullptr);
    j["threshold_at_max"] = valid ? nlohmann::json(threshold_at_max) : nlohmann::json(nullptr);
    j["fpr_at_max"] = valid ? nlohmann::json(fpr_at_max) : nlohmann::json(nullptr);
    j["tpr_at_max"] = valid ? nlohmann::json(tpr_at_max) : nlohmann::json(nullptr);
    j["flagged_rows"] = flagged_rows;
    return j.dump();
}

CurveTable roc(std::span<const double> background, std::span<const double> signal) {
    if (background.empty() || signal.empty()) throw DataError("ROC needs non-empty background and signal scores");
    std::vector<double> bg(background.begin(), background.end());
    std::vector<double> sg(signal.begin(), signal.end());
    std::sort(bg.begin(), bg.end(), std::greater<>());
    std::sort(sg.begin(), sg.end(), std::greater<>());
    std::vector<double> cuts;
    cuts.reserve(bg.size() + sg.size());
    std::merge(bg.begin(), bg.end(), sg.begin(), sg.end(), std::back_inserter(cuts), std::greater<>());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const double n_bg = static_cast<double>(bg.size());
    const double n_sg = static_cast<double>(sg.size());
    CurveTable table;
    table.rows.reserve(cuts.size() + 1);
    std::size_t ib = 0, is = 0;  // counts strictly above the current cut
    for (double cut : cuts) {
        while (ib < bg.size() && bg[ib] > cut) ++ib;
        while (is < sg.size() && sg[is] > cut) ++is;
        CurveRow row;
        row.threshold = cut;
        row.n_background_pass = static_cast<std::int64_t>(ib);
        row.fpr = static_cast<double>(ib) / n_bg;
        row.tpr = static_cast<double>(is) / n_sg;
        table.rows.push_back(row);
    }
    CurveRow all;
    all.threshold = -std::numeric_limits<double>::infinity();
    all.n_background_pass = static_cast<std::int64_t>(bg.size());
    all.fpr = 1.0;
    all.tpr = 1.0;
    table.rows.push_back(all);
    return table;
}

CurveTable sic(CurveTable curve, std::int64_t min_background_count) {
    for (auto& r : curve.rows) {
        r.flagged = r.n_background_pass < std::max<std::int64_t>(min_background_count, 1) || r.fpr <= 0.0;
        r.sic = r.flagged ? std::numeric_limits<double>::quiet_NaN() : r.tpr / std::sqrt(r.fpr);
    }
    return curve;
}

CurveSummary summarize(const CurveTable& curve) {
    CurveSummary s;
    for (const auto& r : curve.rows) {
        if (r.flagged) {
            ++s.flagged_rows;
            continue;
        }
        if (!s.valid || r.sic > s.max_sic) {
            s.valid = true;
            s.max_sic = r.sic;
            s.threshold_at_max = r.threshold;
            s.fpr_at_max = r.fpr;
            s.tpr_at_max = r.tpr;
        }
    }
    return s;
}

CurveTable combined_diagonal_sic(std::span<const double> r1_background, std::span<const double> r1_signal,
                                 std::span<const double> r2_background, std::span<const double> r2_signal,
                                 std::span<const double> efficiencies, std::int64_t min_background_count) {
    if (r1_background.empty() || r1_signal.empty()) throw DataError("combined SIC needs background and signal scores");
    if (r1_background.size() != r2_background.size() || r1_signal.size() != r2_signal.size())
        throw ContractError("combined SIC needs paired scores for both autoencoders");
    std::vector<double> effs(efficiencies.begin(), efficiencies.end());
    std::sort(effs.begin(), effs.end());

    CurveTable table;
    table.kind = CurveKind::diagonal;
    for (double e : effs) {
        const Thresholds c = diagonal_thresholds(r1_background, r2_background, e);
        const RegionCounts bg = count_regions(r1_background, r2_background, c);
        const RegionCounts sg = count_regions(r1_signal, r2_signal, c);
        CurveRow row;
        row.threshold = e;
        row.c1 = c.c1;
        row.c2 = c.c2;
        row.n_background_pass = bg.n_gg;
        row.fpr = static_cast<double>(bg.n_gg) / static_cast<double>(r1_background.size());
        row.tpr = static_cast<double>(sg.n_gg) / static_cast<double>(r1_signal.size());
        table.rows.push_back(row);
    }
    return sic(std::move(table), min_background_count);
}

std::vector<double> log_space(double lo, double hi, int n) {
    if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw ConfigError("invalid log-space range");
    std::vector<double> v;
    for (int i = 0; i < n; ++i)
        v.push_back(n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1)));
    return v;
}

}  // namespace dae
