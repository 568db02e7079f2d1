#include "dae/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "dae/error.hpp"

namespace dae {

std::string to_string(SignalKind kind) {
    switch (kind) {
        case SignalKind::extra_lepton: return "extra-lepton";
        case SignalKind::hard_object: return "hard-object";
        case SignalKind::correlated_pair: return "correlated-pair";
    }
    return "unknown";
}

SignalKind signal_kind_from_string(const std::string& name) {
    if (name == "extra-lepton") return SignalKind::extra_lepton;
    if (name == "hard-object") return SignalKind::hard_object;
    if (name == "correlated-pair") return SignalKind::correlated_pair;
    throw ConfigError("unknown signal kind '" + name + "' (expected extra-lepton, hard-object or correlated-pair)");
}

void GeneratorConfig::validate() const {
    layout.validate();
    for (const CategoryConfig* c : {&muons, &electrons, &jets}) {
        if (!(c->mean_multiplicity >= 0.0) || !(c->pt_floor >= 0.0) || !(c->pt_shape > 0.0) || !(c->pt_scale > 0.0) ||
            !(c->eta_sigma > 0.0) || !(c->mass >= 0.0) || !(c->mass_noise >= 0.0))
            throw ConfigError("invalid object category settings");
    }
    if (!(eta_max > 0.0)) throw ConfigError("eta_max must be positive");
    if (require_lepton && layout.max_muons + layout.max_electrons == 0)
        throw ConfigError("require_lepton needs at least one lepton slot");
    if (require_lepton && muons.mean_multiplicity + electrons.mean_multiplicity <= 0.0)
        throw ConfigError("require_lepton needs a positive lepton multiplicity");
    if (!(extra_lepton_mean_muons >= 0.0) || !(extra_lepton_mean_electrons >= 0.0) || !(hard_pt_shift >= 0.0) ||
        !(pair_pt_floor >= 0.0) || !(pair_pt_shape > 0.0) || !(pair_pt_scale > 0.0) || !(pair_pt_spread >= 0.0) ||
        !(pair_eta_spread >= 0.0) || !(pair_phi_spread >= 0.0) || !(pair_mass >= 0.0))
        throw ConfigError("invalid signal settings");
}

namespace {

struct Object {
    double pt = 0.0, eta = 0.0, phi = 0.0, m = 0.0;
};

class EventSampler {
public:
    EventSampler(std::uint64_t seed, const GeneratorConfig& config) : rng_(seed), config_(config) {}

    int multiplicity(double mean, int max_slots) {
        if (max_slots == 0 || mean <= 0.0) return 0;
        std::poisson_distribution<int> dist(mean);
        int k;
        do k = dist(rng_);
        while (k > max_slots);
        return k;
    }

    double truncated_normal(double sigma) {
        std::normal_distribution<double> dist(0.0, sigma);
        double x;
        do x = dist(rng_);
        while (std::abs(x) > config_.eta_max);
        return x;
    }

    double phi() {
        std::uniform_real_distribution<double> dist(-std::numbers::pi, std::numbers::pi);
        return dist(rng_);
    }

    double gamma(double shape, double scale) { return std::gamma_distribution<double>(shape, scale)(rng_); }
    double normal(double sigma) { return sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(rng_) : 0.0; }

    Object object(const CategoryConfig& c) {
        Object o;
        o.pt = c.pt_floor + gamma(c.pt_shape, c.pt_scale);
        o.eta = truncated_normal(c.eta_sigma);
        o.phi = phi();
        o.m = c.mass + std::abs(normal(c.mass_noise));
        return o;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
    const GeneratorConfig& config_;
};

double wrap_phi(double phi) {
    while (phi >= std::numbers::pi) phi -= 2.0 * std::numbers::pi;
    while (phi < -std::numbers::pi) phi += 2.0 * std::numbers::pi;
    return phi;
}

void store(EventMatrix& events, Eigen::Index row, const EventLayout& layout, ObjectKind kind,
           std::vector<Object>& objects) {
    std::sort(objects.begin(), objects.end(), [](const Object& a, const Object& b) { return a.pt > b.pt; });
    const int slots = layout.slot_count(kind);
    if (static_cast<int>(objects.size()) > slots) objects.resize(static_cast<std::size_t>(slots));
    const int first = layout.first_slot(kind);
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const int slot = first + static_cast<int>(i);
        // Values are kept at f32 precision so EVT1 round trips are exact.
        events(row, layout.column(slot, 0)) = static_cast<float>(objects[i].pt);
        events(row, layout.column(slot, 1)) = static_cast<float>(objects[i].eta);
        events(row, layout.column(slot, 2)) = static_cast<float>(objects[i].phi);
        if (layout.features_per_object == 4) events(row, layout.column(slot, 3)) = static_cast<float>(objects[i].m);
    }
}

Dataset generate(std::size_t n, std::uint64_t seed, const GeneratorConfig& config, std::uint16_t label) {
    config.validate();
    if (n == 0) throw ConfigError("number of events must be at least 1");
    const EventLayout& layout = config.layout;
    const auto kind = static_cast<SignalKind>(label);

    double mean_mu = config.muons.mean_multiplicity;
    double mean_el = config.electrons.mean_multiplicity;
    if (label != 0 && kind == SignalKind::extra_lepton) {
        mean_mu = config.extra_lepton_mean_muons;
        mean_el = config.extra_lepton_mean_electrons;
    }
    const double pt_shift = (label != 0 && kind == SignalKind::hard_object) ? config.hard_pt_shift : 0.0;

    Dataset data;
    data.layout = layout;
    data.events = EventMatrix::Zero(static_cast<Eigen::Index>(n), layout.n_features());
    data.labels.emplace(n, label);
    EventSampler sampler(seed, config);

    std::vector<Object> muons, electrons, jets;
    for (std::size_t e = 0; e < n; ++e) {
        int n_mu, n_el;
        do {
            n_mu = sampler.multiplicity(mean_mu, layout.max_muons);
            n_el = sampler.multiplicity(mean_el, layout.max_electrons);
        } while (config.require_lepton && n_mu + n_el == 0);
        const int n_jet = sampler.multiplicity(config.jets.mean_multiplicity, layout.max_jets);

        muons.clear();
        electrons.clear();
        jets.clear();
        for (int i = 0; i < n_mu; ++i) muons.push_back(sampler.object(config.muons));
        for (int i = 0; i < n_el; ++i) electrons.push_back(sampler.object(config.electrons));
        for (int i = 0; i < n_jet; ++i) jets.push_back(sampler.object(config.jets));

        if (pt_shift > 0.0)
            for (auto* group : {&muons, &electrons, &jets})
                for (auto& o : *group) o.pt += pt_shift;

        if (label != 0 && kind == SignalKind::correlated_pair && layout.max_jets > 0) {
            Object first;
            first.pt = config.pair_pt_floor + sampler.gamma(config.pair_pt_shape, config.pair_pt_scale);
            first.eta = sampler.truncated_normal(1.0);
            first.phi = sampler.phi();
            first.m = config.pair_mass;
            Object second = first;
            second.pt = first.pt * std::max(0.0, 1.0 + sampler.normal(config.pair_pt_spread));
            second.eta = std::clamp(first.eta + sampler.normal(config.pair_eta_spread), -config.eta_max, config.eta_max);
            second.phi = wrap_phi(first.phi + std::numbers::pi + sampler.normal(config.pair_phi_spread));
            jets.push_back(first);
            jets.push_back(second);
        }

        const auto row = static_cast<Eigen::Index>(e);
        store(data.events, row, layout, ObjectKind::muon, muons);
        store(data.events, row, layout, ObjectKind::electron, electrons);
        store(data.events, row, layout, ObjectKind::jet, jets);
    }

    data.provenance["generator"] = label == 0 ? "background" : to_string(kind);
    data.provenance["n"] = std::to_string(n);
    data.provenance["seed"] = std::to_string(seed);
    data.provenance["features_per_object"] = std::to_string(layout.features_per_object);
    return data;
}

}  // namespace

Dataset generate_background(std::size_t n, std::uint64_t seed, const GeneratorConfig& config) {
    return generate(n, seed, config, 0);
}

Dataset generate_signal(std::size_t n, std::uint64_t seed, SignalKind kind, const GeneratorConfig& config) {
    const auto label = static_cast<std::uint16_t>(kind);
    if (label < 1 || label > 3) throw ConfigError("unknown signal kind");
    return generate(n, seed, config, label);
}

std::size_t injected_count(std::size_t n_background, double fraction) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ContractError("injection fraction must lie in [0, 1)");
    if (fraction == 0.0) return 0;
    auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_background) / (1.0 - fraction)));
    // Settle on the count whose share of the total rounds back to itself.
    while (count > 0 && static_cast<double>(count) > std::round(fraction * static_cast<double>(n_background + count)))
        --count;
    while (static_cast<double>(count) < std::round(fraction * static_cast<double>(n_background + count))) ++count;
    return count;
}

Dataset inject_signal(const Dataset& background, const Dataset& signal, double fraction, std::uint64_t seed) {
    if (!(background.layout == signal.layout)) throw ContractError("background and signal layouts differ");
    background.validate();
    signal.validate();
    const std::size_t n_sig = injected_count(background.size(), fraction);
    if (n_sig > signal.size())
        throw DataError("signal sample has " + std::to_string(signal.size()) + " events, " + std::to_string(n_sig) +
                        " needed");

    const std::size_t total = background.size() + n_sig;
    Dataset mixed;
    mixed.layout = background.layout;
    mixed.events.resize(static_cast<Eigen::Index>(total), background.events.cols());
    mixed.labels.emplace(total);

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t r = 0; r < total; ++r) {
        const std::size_t src = order[r];
        const auto dst = static_cast<Eigen::Index>(r);
        if (src < background.size()) {
            mixed.events.row(dst) = background.events.row(static_cast<Eigen::Index>(src));
            (*mixed.labels)[r] = background.labels ? (*background.labels)[src] : 0;
        } else {
            const std::size_t s = src - background.size();
            mixed.events.row(dst) = signal.events.row(static_cast<Eigen::Index>(s));
            (*mixed.labels)[r] = signal.labels ? (*signal.labels)[s] : 1;
        }
    }
    mixed.provenance["generator"] = "mix";
    mixed.provenance["fraction"] = std::to_string(fraction);
    mixed.provenance["n_signal"] = std::to_string(n_sig);
    mixed.provenance["seed"] = std::to_string(seed);
    return mixed;
}

}  // namespace dae
