#include "dae/trigger.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dae/error.hpp"

namespace dae {

std::int64_t PrescaleConfig::prescale(Region r) const {
    switch (r) {
        case Region::ll: return prescale_ll;
        case Region::lg: return prescale_lg;
        case Region::gl: return prescale_gl;
        case Region::gg: return 1;
    }
    return 1;
}

void PrescaleConfig::validate() const {
    if (prescale_ll < 1 || prescale_lg < 1 || prescale_gl < 1) throw ConfigError("prescales must be at least 1");
    if (!std::isfinite(thresholds.c1) || !std::isfinite(thresholds.c2)) throw ConfigError("thresholds must be finite");
}

PrescaleConfig PrescaleConfig::shared(std::int64_t prescale, Thresholds thresholds, std::uint64_t seed) {
    return PrescaleConfig{prescale, prescale, prescale, thresholds, seed};
}

TriggerDecision stream_decide(double r1, double r2, const PrescaleConfig& config, std::mt19937_64& rng) {
    TriggerDecision d;
    d.region = classify(r1, r2, config.thresholds);
    const std::int64_t p = config.prescale(d.region);
    if (p == 1) {
        d.keep = true;
    } else {
        std::uniform_int_distribution<std::int64_t> draw(0, p - 1);
        d.keep = draw(rng) == 0;
    }
    d.weight = d.keep ? p : 0;
    return d;
}

std::int64_t TriggerOutput::total_seen() const {
    return seen[0] + seen[1] + seen[2] + seen[3];
}

std::int64_t TriggerOutput::total_kept() const {
    return kept[0] + kept[1] + kept[2] + kept[3];
}

double TriggerOutput::kept_fraction() const {
    const auto n = total_seen();
    return n ? static_cast<double>(total_kept()) / static_cast<double>(n) : 0.0;
}

RegionCounts TriggerOutput::weighted_counts() const {
    RegionCounts c;
    for (int r = 0; r < 4; ++r) {
        const auto region = static_cast<Region>(r);
        c[region] = kept[static_cast<std::size_t>(r)] * config.prescale(region);
    }
    return c;
}

std::string TriggerOutput::ledger_json() const {
    nlohmann::json j;
    for (int r = 0; r < 4; ++r) {
        const auto region = static_cast<Region>(r);
        j["regions"][to_string(region)] = {{"seen", seen[static_cast<std::size_t>(r)]},
                                           {"kept", kept[static_cast<std::size_t>(r)]},
                                           {"prescale", config.prescale(region)}};
    }
    j["thresholds"] = {{"c1", config.thresholds.c1}, {"c2", config.thresholds.c2}};
    j["seed"] = config.seed;
    j["total_seen"] = total_seen();
    j["total_kept"] = total_kept();
    j["kept_fraction"] = kept_fraction();
    return j.dump(2);
}

TriggerStream::TriggerStream(PrescaleConfig config) : rng_(config.seed) {
    config.validate();
    output_.config = config;
}

TriggerDecision TriggerStream::process(double r1, double r2) {
    if (!std::isfinite(r1) || !std::isfinite(r2)) throw DataError("non-finite score in trigger stream");
    const TriggerDecision d = stream_decide(r1, r2, output_.config, rng_);
    const auto r = static_cast<std::size_t>(d.region);
    ++output_.seen[r];
    if (d.keep) {
        ++output_.kept[r];
        output_.events.push_back(KeptEvent{next_index_, d.region, d.weight});
    }
    ++next_index_;
    return d;
}

std::string TriggerStream::rng_state() const {
    std::ostringstream out;
    out << rng_;
    return out.str();
}

void TriggerStream::restore_rng_state(const std::string& state) {
    std::istringstream in(state);
    in >> rng_;
    if (!in) throw DataError("malformed trigger random state");
}

TriggerOutput run_trigger(std::span<const double> r1, std::span<const double> r2, const PrescaleConfig& config) {
    if (r1.size() != r2.size()) throw ContractError("score vectors differ in length");
    TriggerStream stream(config);
    for (std::size_t i = 0; i < r1.size(); ++i) stream.process(r1[i], r2[i]);
    return stream.output();
}

double estimate_rate(const RegionEfficiencies& e, const PrescaleConfig& config) {
    config.validate();
    return e.gg + e.ll / static_cast<double>(config.prescale_ll) + e.lg / static_cast<double>(config.prescale_lg) +
           e.gl / static_cast<double>(config.prescale_gl);
}

double estimate_rate(double eps, const PrescaleConfig& config) {
    return estimate_rate(RegionEfficiencies{eps, eps, eps, eps}, config);
}

namespace {

// floor() that does not lose an integer to rounding in budget arithmetic.
double budget_floor(double x) {
    return std::floor(x * (1.0 + 1e-12));
}

}  // namespace

PrescaleChoice choose_prescales(double expected_sr, double expected_ll, double expected_lg, double expected_gl,
                                double safety_factor, Thresholds thresholds, std::uint64_t seed) {
    if (!(expected_sr > 0.0) || !(expected_ll > 0.0) || !(expected_lg > 0.0) || !(expected_gl > 0.0))
        throw ConfigError("expected region counts must be positive");
    if (!(safety_factor > 0.0)) throw ConfigError("safety factor must be positive");

    const std::array<double, 3> n = {expected_ll, expected_lg, expected_gl};
    std::array<double, 3> p = {1.0, 1.0, 1.0};
    PrescaleChoice choice;
    choice.bound = 1.0 / (expected_sr * safety_factor);

    double minimum = 0.0;
    for (double x : n) minimum += 1.0 / x;
    if (minimum > choice.bound) {
        choice.infeasible = true;
    } else {
        // Even split of the variance budget; regions that cannot afford P > 1
        // are pinned at 1 and the remainder is re-split among the others.
        std::array<bool, 3> pinned = {false, false, false};
        bool changed = true;
        while (changed) {
            changed = false;
            double budget = choice.bound;
            int free = 0;
            for (int r = 0; r < 3; ++r) {
                if (pinned[static_cast<std::size_t>(r)]) budget -= 1.0 / n[static_cast<std::size_t>(r)];
                else ++free;
            }
            for (int r = 0; r < 3; ++r) {
                const auto k = static_cast<std::size_t>(r);
                if (pinned[k]) continue;
                const double share = free ? budget / free : 0.0;
                p[k] = budget_floor(share * n[k]);
                if (p[k] < 1.0) {
                    p[k] = 1.0;
                    pinned[k] = true;
                    changed = true;
                }
            }
        }
        // Hand out leftover slack greedily.
        for (std::size_t k = 0; k < 3; ++k) {
            double used = 0.0;
            for (std::size_t j = 0; j < 3; ++j) used += p[j] / n[j];
            const double slack = choice.bound - used;
            if (slack > 0.0) p[k] += budget_floor(slack * n[k]);
        }
    }

    choice.config = PrescaleConfig{static_cast<std::int64_t>(p[0]), static_cast<std::int64_t>(p[1]),
                                   static_cast<std::int64_t>(p[2]), thresholds, seed};
    for (std::size_t k = 0; k < 3; ++k) choice.prediction_rel_variance += p[k] / n[k];
    return choice;
}

AbcdReport offline_abcd_from_stream(const TriggerOutput& output, std::optional<std::int64_t> true_background_sr) {
    for (Region r : {Region::ll, Region::lg, Region::gl})
        if (output.kept[static_cast<std::size_t>(r)] == 0)
            throw UndefinedPredictionError(std::string("no kept events in support region ") + to_string(r));
    AbcdReport report;
    report.counts = output.weighted_counts();
    report.observed_sr = report.counts.n_gg;
    report.predicted_sr = abcd_prediction(report.counts);
    report.significance_uncorrected = significance(report.observed_sr, report.predicted_sr);
    if (true_background_sr) {
        report.true_background_sr = true_background_sr;
        report.significance_corrected = significance(report.observed_sr, static_cast<double>(*true_background_sr));
        if (*true_background_sr > 0) report.closure_ratio = report.predicted_sr / static_cast<double>(*true_background_sr);
    }
    return report;
}

}  // namespace dae
