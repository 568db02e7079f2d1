#include "dae/experiment.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dae/error.hpp"
#include "dae/standardize.hpp"

namespace dae {

namespace {

using nlohmann::json;

TrainConfig seeded(const ExperimentConfig& config) {
    TrainConfig t = config.train;
    t.seed = derive_seed(config.seed, "shuffle");
    return t;
}

json category_json(const CategoryConfig& c) {
    return {{"mean_multiplicity", c.mean_multiplicity}, {"pt_floor", c.pt_floor}, {"pt_shape", c.pt_shape},
            {"pt_scale", c.pt_scale},   {"eta_sigma", c.eta_sigma},   {"mass", c.mass},
            {"mass_noise", c.mass_noise}};
}

// Reads known keys from `j` into fields; anything left over is an error.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("config section '" + path_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.push_back(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key '" + path_ + key + "': " + e.what());
        }
    }

    Reader sub(const char* key) {
        seen_.push_back(key);
        auto it = j_.find(key);
        static const json empty = json::object();
        return Reader(it == j_.end() ? empty : *it, path_ + key + ".");
    }

    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
                throw ConfigError("unknown config key '" + path_ + it.key() + "'");
    }

private:
    const json& j_;
    std::string path_;
    std::vector<std::string> seen_;
};

void read_category(Reader r, CategoryConfig& c) {
    r.get("mean_multiplicity", c.mean_multiplicity);
    r.get("pt_floor", c.pt_floor);
    r.get("pt_shape", c.pt_shape);
    r.get("pt_scale", c.pt_scale);
    r.get("eta_sigma", c.eta_sigma);
    r.get("mass", c.mass);
    r.get("mass_noise", c.mass_noise);
}

}  // namespace

void ExperimentConfig::validate() const {
    generator.validate();
    train.validate();
    if (data.n_train < 2 || data.n_test < 2 || data.n_eval < 2) throw ConfigError("data splits need at least two events");
    if (!(data.injection_fraction >= 0.0 && data.injection_fraction < 1.0))
        throw ConfigError("injection_fraction must lie in [0, 1)");
    if (encoder_widths.empty()) throw ConfigError("encoder_widths must not be empty");
    for (int w : encoder_widths)
        if (w < 1) throw ConfigError("encoder widths must be positive");
    for (double e : scan.efficiencies)
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("scan efficiencies must lie in (0, 1)");
    if (scan.grid_n < 1 || !(scan.grid_lo > 0.0) || !(scan.grid_hi < 1.0) || scan.grid_lo > scan.grid_hi)
        throw ConfigError("invalid scan grid");
    if (!(trigger.efficiency_axis1 > 0.0 && trigger.efficiency_axis1 < 1.0) ||
        !(trigger.efficiency_axis2 > 0.0 && trigger.efficiency_axis2 < 1.0))
        throw ConfigError("trigger efficiencies must lie in (0, 1)");
    if (trigger.prescale_ll < 1 || trigger.prescale_lg < 1 || trigger.prescale_gl < 1)
        throw ConfigError("prescales must be at least 1");
    if (!(trigger.safety_factor > 0.0)) throw ConfigError("safety_factor must be positive");
}

std::string ExperimentConfig::to_json() const {
    const auto& g = generator;
    json j;
    j["seed"] = seed;
    j["layout"] = {{"max_muons", g.layout.max_muons},
                   {"max_electrons", g.layout.max_electrons},
                   {"max_jets", g.layout.max_jets},
                   {"features_per_object", g.layout.features_per_object}};
    j["generator"] = {{"muons", category_json(g.muons)},
                      {"electrons", category_json(g.electrons)},
                      {"jets", category_json(g.jets)},
                      {"eta_max", g.eta_max},
                      {"require_lepton", g.require_lepton},
                      {"extra_lepton_mean_muons", g.extra_lepton_mean_muons},
                      {"extra_lepton_mean_electrons", g.extra_lepton_mean_electrons},
                      {"hard_pt_shift", g.hard_pt_shift},
                      {"pair_pt_floor", g.pair_pt_floor},
                      {"pair_pt_shape", g.pair_pt_shape},
                      {"pair_pt_scale", g.pair_pt_scale},
                      {"pair_pt_spread", g.pair_pt_spread},
                      {"pair_eta_spread", g.pair_eta_spread},
                      {"pair_phi_spread", g.pair_phi_spread},
                      {"pair_mass", g.pair_mass}};
    j["data"] = {{"n_train", data.n_train},
                 {"n_test", data.n_test},
                 {"n_eval", data.n_eval},
                 {"injection_fraction", data.injection_fraction}};
    j["model"] = {{"encoder_widths", encoder_widths}, {"exempt_padding", exempt_padding}};
    j["train"] = {{"lambda", train.lambda},
                  {"batch_size", train.batch_size},
                  {"max_epochs", train.max_epochs},
                  {"patience", train.patience},
                  {"loss_power", train.loss_power},
                  {"learning_rate", train.adam.learning_rate},
                  {"beta1", train.adam.beta1},
                  {"beta2", train.adam.beta2},
                  {"epsilon", train.adam.epsilon},
                  {"disco_transform", dae::to_string(train.disco_transform)}};
    j["scan"] = {{"efficiencies", scan.efficiencies},
                 {"grid_n", scan.grid_n},
                 {"grid_lo", scan.grid_lo},
                 {"grid_hi", scan.grid_hi},
                 {"min_region_count", scan.min_region_count},
                 {"min_background_count", scan.min_background_count}};
    j["trigger"] = {{"efficiency_axis1", trigger.efficiency_axis1},
                    {"efficiency_axis2", trigger.efficiency_axis2},
                    {"prescale_ll", trigger.prescale_ll},
                    {"prescale_lg", trigger.prescale_lg},
                    {"prescale_gl", trigger.prescale_gl},
                    {"auto_prescale", trigger.auto_prescale},
                    {"safety_factor", trigger.safety_factor}};
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    {
        Reader root(j, "");
        root.get("seed", c.seed);
        {
            Reader l = root.sub("layout");
            l.get("max_muons", c.generator.layout.max_muons);
            l.get("max_electrons", c.generator.layout.max_electrons);
            l.get("max_jets", c.generator.layout.max_jets);
            l.get("features_per_object", c.generator.layout.features_per_object);
        }
        {
            auto& g = c.generator;
            Reader r = root.sub("generator");
            read_category(r.sub("muons"), g.muons);
            read_category(r.sub("electrons"), g.electrons);
            read_category(r.sub("jets"), g.jets);
            r.get("eta_max", g.eta_max);
            r.get("require_lepton", g.require_lepton);
            r.get("extra_lepton_mean_muons", g.extra_lepton_mean_muons);
            r.get("extra_lepton_mean_electrons", g.extra_lepton_mean_electrons);
            r.get("hard_pt_shift", g.hard_pt_shift);
            r.get("pair_pt_floor", g.pair_pt_floor);
            r.get("pair_pt_shape", g.pair_pt_shape);
            r.get("pair_pt_scale", g.pair_pt_scale);
            r.get("pair_pt_spread", g.pair_pt_spread);
            r.get("pair_eta_spread", g.pair_eta_spread);
            r.get("pair_phi_spread", g.pair_phi_spread);
            r.get("pair_mass", g.pair_mass);
        }
        {
            Reader r = root.sub("data");
            r.get("n_train", c.data.n_train);
            r.get("n_test", c.data.n_test);
            r.get("n_eval", c.data.n_eval);
            r.get("injection_fraction", c.data.injection_fraction);
        }
        {
            Reader r = root.sub("model");
            r.get("encoder_widths", c.encoder_widths);
            r.get("exempt_padding", c.exempt_padding);
        }
        {
            Reader r = root.sub("train");
            r.get("lambda", c.train.lambda);
            r.get("batch_size", c.train.batch_size);
            r.get("max_epochs", c.train.max_epochs);
            r.get("patience", c.train.patience);
            r.get("loss_power", c.train.loss_power);
            r.get("learning_rate", c.train.adam.learning_rate);
            r.get("beta1", c.train.adam.beta1);
            r.get("beta2", c.train.adam.beta2);
            r.get("epsilon", c.train.adam.epsilon);
            std::string transform = dae::to_string(c.train.disco_transform);
            r.get("disco_transform", transform);
            c.train.disco_transform = score_transform_from_string(transform);
        }
        {
            Reader r = root.sub("scan");
            r.get("efficiencies", c.scan.efficiencies);
            r.get("grid_n", c.scan.grid_n);
            r.get("grid_lo", c.scan.grid_lo);
            r.get("grid_hi", c.scan.grid_hi);
            r.get("min_region_count", c.scan.min_region_count);
            r.get("min_background_count", c.scan.min_background_count);
        }
        {
            Reader r = root.sub("trigger");
            r.get("efficiency_axis1", c.trigger.efficiency_axis1);
            r.get("efficiency_axis2", c.trigger.efficiency_axis2);
            r.get("prescale_ll", c.trigger.prescale_ll);
            r.get("prescale_lg", c.trigger.prescale_lg);
            r.get("prescale_gl", c.trigger.prescale_gl);
            r.get("auto_prescale", c.trigger.auto_prescale);
            r.get("safety_factor", c.trigger.safety_factor);
        }
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return from_json(text.str());
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << to_json() << '\n';
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& stream) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char ch : stream) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t x = seed ^ h;
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

TrainResult fit_dual(const Dataset& train, const Dataset& test, const ExperimentConfig& config,
                     const EpochCallback& on_epoch) {
    const StandardizationStats stats = fit_standardization(train, config.exempt_padding);
    DualAutoencoder model =
        make_dual_autoencoder(static_cast<int>(train.events.cols()), config.encoder_widths, derive_seed(config.seed, "init"));
    TrainResult result = dae::train(std::move(model), apply_standardization(train.events, stats),
                                    apply_standardization(test.events, stats), seeded(config), on_epoch);
    result.model.stats = stats;
    return result;
}

SingleTrainResult fit_single(const Dataset& train, const Dataset& test, const ExperimentConfig& config,
                             StandardizationStats& stats, const EpochCallback& on_epoch) {
    stats = fit_standardization(train, config.exempt_padding);
    Autoencoder model = make_autoencoder(static_cast<int>(train.events.cols()), config.encoder_widths,
                                         derive_seed(config.seed, "init-single"));
    return train_single(std::move(model), apply_standardization(train.events, stats),
                        apply_standardization(test.events, stats), seeded(config), on_epoch);
}

ScoreVector score(const Autoencoder& ae, const StandardizationStats* stats, const Dataset& data) {
    data.validate();
    if (data.events.cols() != ae.input_dim())
        throw LayoutMismatchError("dataset has " + std::to_string(data.events.cols()) + " features, model expects " +
                                  std::to_string(ae.input_dim()));
    if (stats) return reconstruction_error(ae, apply_standardization(data.events, *stats));
    return reconstruction_error(ae, data.events);
}

ScoredSample score(const DualAutoencoder& model, const Dataset& data) {
    const StandardizationStats* stats = model.stats ? &*model.stats : nullptr;
    ScoredSample s;
    s.r1 = score(model.ae1, stats, data);
    s.r2 = score(model.ae2, stats, data);
    if (data.labels) s.labels = *data.labels;
    return s;
}

}  // namespace dae
