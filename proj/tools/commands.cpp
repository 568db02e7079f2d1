#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "dae/analysis.hpp"
#include "dae/checkpoint.hpp"
#include "dae/csv.hpp"
#include "dae/error.hpp"
#include "dae/trigger.hpp"

namespace dae::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ExperimentConfig load_config(const Global& g) {
    if (g.deterministic) Eigen::setNbThreads(1);
    ExperimentConfig c = g.config_path ? ExperimentConfig::load(*g.config_path) : ExperimentConfig{};
    if (g.seed) c.seed = *g.seed;
    return c;
}

void write_resolved(const Global& g, const ExperimentConfig& c) {
    c.validate();
    fs::create_directories(g.out_dir);
    c.save(g.out_dir / "config.json");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << text << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

json nullable(const std::optional<double>& x) {
    return x && std::isfinite(*x) ? json(*x) : json(nullptr);
}

json report_json(const AbcdReport& r) {
    json j;
    j["counts"] = {{"ll", r.counts.n_ll}, {"lg", r.counts.n_lg}, {"gl", r.counts.n_gl}, {"gg", r.counts.n_gg}};
    j["observed_sr"] = r.observed_sr;
    j["predicted_sr"] = r.predicted_sr;
    j["true_background_sr"] = r.true_background_sr ? json(*r.true_background_sr) : json(nullptr);
    j["closure_ratio"] = nullable(r.closure_ratio);
    j["significance_uncorrected"] = r.significance_uncorrected;
    j["significance_corrected"] = nullable(r.significance_corrected);
    return j;
}

std::pair<int, int> parse_grid(const std::string& text, int fallback) {
    if (text.empty()) return {fallback, fallback};
    const auto x = text.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(text);
        std::size_t used_a = 0, used_b = 0;
        const int a = std::stoi(text.substr(0, x), &used_a);
        const int b = std::stoi(text.substr(x + 1), &used_b);
        if (a < 1 || b < 1 || used_a != x || used_b != text.size() - x - 1) throw std::invalid_argument(text);
        return {a, b};
    } catch (const std::exception&) {
        throw ConfigError("grid must look like 20x20, got '" + text + "'");
    }
}

Dataset load_input(const std::string& path) {
    if (path.empty()) throw ConfigError("missing input file");
    return load_events(path);
}

ScoredSample load_scores(const ScoreSource& s) {
    if (!s.scores.empty()) {
        if (!s.model.empty() || !s.data.empty()) throw ConfigError("--scores replaces --model and --data");
        return ScoredSample::read_csv(s.scores);
    }
    if (s.model.empty() || s.data.empty()) throw ConfigError("need --model and --data, or --scores");
    const Checkpoint ckpt = read_checkpoint(s.model);
    return score(ckpt.to_dual(), load_input(s.data));
}

void log_epoch(const EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << "  train " << r.train_total << " (R1 " << r.train_recon1 << ", R2 "
              << r.train_recon2 << ", disco2 " << r.train_disco << ")  test " << r.test_total << '\n';
}

// ROC/SIC tables of a single-autoencoder checkpoint, one per signal class.
void eval_single(const fs::path& out, const Checkpoint& ckpt, const Dataset& data, const ScanConfig& scan) {
    const ScoreVector r = score(ckpt.autoencoders.front(), ckpt.stats ? &*ckpt.stats : nullptr, data);
    if (!data.has_labels()) throw DataError("evaluation needs labelled events");
    const auto& labels = *data.labels;
    ScoreVector bg;
    std::map<std::uint16_t, ScoreVector> sig;
    for (std::size_t i = 0; i < r.size(); ++i) (labels[i] == 0 ? bg : sig[labels[i]]).push_back(r[i]);
    if (bg.empty()) throw DataError("evaluation needs background events");
    json summary = json::array();
    for (const auto& [label, s] : sig) {
        const CurveTable t = sic(roc(bg, s), scan.min_background_count);
        t.write_csv(out / ("roc_single_" + std::to_string(label) + ".csv"));
        summary.push_back({{"label", label}, {"single", json::parse(summarize(t).to_json())}});
    }
    write_text(out / "evaluation_single.json", json{{"classes", summary}}.dump(2));
}

}  // namespace

void cmd_gen(const Global& g, const GenArgs& a) {
    ExperimentConfig c = load_config(g);
    if (a.features_per_object) c.generator.layout.features_per_object = a.features_per_object;
    const int modes = int(a.background) + int(!a.signal.empty()) + int(!a.mix.empty());
    if (modes != 1) throw ConfigError("gen needs exactly one of --background, --signal or --mix");
    if (a.n == 0) throw ConfigError("-n must be at least 1");
    write_resolved(g, c);

    Dataset d;
    std::string name;
    if (a.background) {
        d = generate_background(a.n, derive_seed(c.seed, "background"), c.generator);
        name = "background.evt";
    } else if (!a.signal.empty()) {
        const SignalKind kind = signal_kind_from_string(a.signal);
        d = generate_signal(a.n, derive_seed(c.seed, "signal-" + a.signal), kind, c.generator);
        name = "signal-" + a.signal + ".evt";
    } else {
        if (a.mix.size() != 2) throw ConfigError("--mix takes a background and a signal file");
        d = inject_signal(load_input(a.mix[0]), load_input(a.mix[1]), a.fraction, derive_seed(c.seed, "mix"));
        name = "mixed.evt";
    }
    const fs::path path = g.out_dir / (a.output.empty() ? name : a.output);
    if (path.extension() == ".csv") write_events_csv(path, d);
    else write_events(path, d);

    json prov(d.provenance);
    prov["n_events"] = d.size();
    prov["n_features"] = d.layout.n_features();
    prov["config_seed"] = c.seed;
    std::size_t n_signal = 0;
    for (auto l : *d.labels) n_signal += l != 0;
    prov["n_signal"] = n_signal;
    write_text(path.string() + ".json", prov.dump(2));
    std::cout << path.string() << ": " << d.size() << " events, " << n_signal << " labelled signal\n";
}

void cmd_train(const Global& g, const TrainArgs& a) {
    ExperimentConfig c = load_config(g);
    if (a.lambda) c.train.lambda = *a.lambda;
    if (a.epochs) c.train.max_epochs = *a.epochs;
    if (a.batch_size) c.train.batch_size = *a.batch_size;
    if (a.patience) c.train.patience = *a.patience;
    if (a.loss_power) c.train.loss_power = *a.loss_power;
    if (a.exempt_padding) c.exempt_padding = true;
    write_resolved(g, c);

    const Dataset train = a.train_path.empty()
                              ? generate_background(c.data.n_train, derive_seed(c.seed, "train"), c.generator)
                              : load_input(a.train_path);
    const Dataset test = a.test_path.empty()
                             ? generate_background(c.data.n_test, derive_seed(c.seed, "test"), c.generator)
                             : load_input(a.test_path);
    if (!(train.layout == test.layout)) throw LayoutMismatchError("train and test files use different layouts");

    const fs::path model = g.out_dir / a.output;
    TrainHistory history;
    if (a.single) {
        StandardizationStats stats;
        const SingleTrainResult r = fit_single(train, test, c, stats, log_epoch);
        write_checkpoint(model, Checkpoint::from_single(r.model, stats, c.train));
        history = r.history;
    } else {
        const TrainResult r = fit_dual(train, test, c, log_epoch);
        write_checkpoint(model, Checkpoint::from_dual(r.model, c.train));
        history = r.history;
    }
    history.write_csv(g.out_dir / "history.csv");
    std::cout << model.string() << ": best epoch " << history.best_epoch << " of " << history.epochs.size() << '\n';
}

void cmd_eval(const Global& g, const EvalArgs& a) {
    const ExperimentConfig c = load_config(g);
    const auto [n1, n2] = parse_grid(a.grid, c.scan.grid_n);
    write_resolved(g, c);

    if (a.source.scores.empty() && !a.source.model.empty()) {
        const Checkpoint ckpt = read_checkpoint(a.source.model);
        if (ckpt.autoencoders.size() == 1) {
            eval_single(g.out_dir, ckpt, load_input(a.source.data), c.scan);
            return;
        }
    }
    const ScoredSample sample = load_scores(a.source);
    sample.write_csv(g.out_dir / "scores.csv");
    const Evaluation e = evaluate(sample, c.scan);
    e.closure.write_csv(g.out_dir / "closure.csv");
    for (const auto& k : e.classes) {
        const std::string s = std::to_string(k.label);
        k.roc_ae1.write_csv(g.out_dir / ("roc_ae1_" + s + ".csv"));
        k.roc_ae2.write_csv(g.out_dir / ("roc_ae2_" + s + ".csv"));
        k.combined.write_csv(g.out_dir / ("combined_" + s + ".csv"));
        k.significance.write_csv(g.out_dir / ("significance_" + s + ".csv"));
        if (!a.grid.empty()) {
            ScoredSample mix = sample.background();
            const ScoredSample sig = sample.signal(k.label);
            mix.r1.insert(mix.r1.end(), sig.r1.begin(), sig.r1.end());
            mix.r2.insert(mix.r2.end(), sig.r2.begin(), sig.r2.end());
            mix.labels.insert(mix.labels.end(), sig.labels.begin(), sig.labels.end());
            threshold_scan(mix, log_grid(n1, n2, c.scan.grid_lo, c.scan.grid_hi), c.scan.min_region_count)
                .write_csv(g.out_dir / ("sic2d_" + s + ".csv"));
        }
    }
    write_text(g.out_dir / "evaluation.json", e.to_json());
    std::cout << "background dCorr " << e.background_dcorr << ", max |closure - 1| (eff >= 0.05) "
              << e.max_closure_deviation(0.05) << '\n';
    for (const auto& k : e.classes)
        std::cout << "class " << k.label << ": max SIC ae1 " << k.ae1.max_sic << ", ae2 " << k.ae2.max_sic
                  << ", combined " << k.combined_summary.max_sic << ", max significance "
                  << k.max_significance_uncorrected << '\n';
}

void cmd_scan(const Global& g, const ScanArgs& a) {
    const ExperimentConfig c = load_config(g);
    const auto [n1, n2] = parse_grid(a.grid, c.scan.grid_n);
    write_resolved(g, c);
    const ScoredSample sample = load_scores(a.source);
    const ScanTable t = threshold_scan(sample, log_grid(n1, n2, c.scan.grid_lo, c.scan.grid_hi), c.scan.min_region_count);
    t.write_csv(g.out_dir / "scan.csv");
    std::cout << (g.out_dir / "scan.csv").string() << ": " << t.rows.size() << " cells\n";
}

void cmd_closure(const Global& g, const ScoreSource& source) {
    const ExperimentConfig c = load_config(g);
    write_resolved(g, c);
    const ScoredSample bg = load_scores(source).background();
    const ScanTable t = threshold_scan(bg, diagonal_grid(c.scan.efficiencies), c.scan.min_region_count);
    t.write_csv(g.out_dir / "closure.csv");
    json rows = json::array();
    double worst = 0.0;
    for (const auto& r : t.rows) {
        rows.push_back({{"eff", r.eff_axis1},
                        {"closure_ratio", nullable(r.closure_ratio)},
                        {"observed", r.background_counts.n_gg},
                        {"flagged", r.flagged}});
        if (!r.flagged && r.eff_axis1 >= 0.05) worst = std::max(worst, std::abs(r.closure_ratio - 1.0));
    }
    write_text(g.out_dir / "closure.json",
               json{{"n_background", bg.size()}, {"rows", rows}, {"max_deviation_eff_ge_0.05", worst}}.dump(2));
    for (const auto& r : t.rows)
        std::cout << "eff " << r.eff_axis1 << "  closure " << r.closure_ratio << (r.flagged ? "  (flagged)" : "")
                  << '\n';
}

void cmd_trigger(const Global& g, const TriggerArgs& a) {
    ExperimentConfig c = load_config(g);
    auto& t = c.trigger;
    if (a.eff1) t.efficiency_axis1 = *a.eff1;
    if (a.eff2) t.efficiency_axis2 = *a.eff2;
    if (a.prescale) t.prescale_ll = t.prescale_lg = t.prescale_gl = *a.prescale;
    if (a.prescale_ll) t.prescale_ll = *a.prescale_ll;
    if (a.prescale_lg) t.prescale_lg = *a.prescale_lg;
    if (a.prescale_gl) t.prescale_gl = *a.prescale_gl;
    if (a.auto_prescale) t.auto_prescale = true;
    if (a.safety_factor) t.safety_factor = *a.safety_factor;
    if (a.model.empty() || a.stream.empty()) throw ConfigError("trigger-sim needs --model and --stream");
    write_resolved(g, c);

    const DualAutoencoder model = read_checkpoint(a.model).to_dual();
    const Dataset stream = load_input(a.stream);
    const ScoredSample scores = score(model, stream);
    // Thresholds come from a calibration run; without one the stream's own background is used.
    const ScoredSample calib = (a.calibration.empty() ? scores : score(model, load_input(a.calibration))).background();
    const Thresholds th = axis_thresholds(calib.r1, calib.r2, t.efficiency_axis1, t.efficiency_axis2);

    const RegionCounts cal = count_regions(calib.r1, calib.r2, th);
    const double n_cal = static_cast<double>(calib.size());
    const RegionEfficiencies eff{cal.n_ll / n_cal, cal.n_lg / n_cal, cal.n_gl / n_cal, cal.n_gg / n_cal};
    const std::uint64_t seed = derive_seed(c.seed, "trigger");
    PrescaleConfig pc{t.prescale_ll, t.prescale_lg, t.prescale_gl, th, seed};
    json choice_json;
    if (t.auto_prescale) {
        const double n = static_cast<double>(stream.size());
        const PrescaleChoice choice =
            choose_prescales(std::max(eff.gg * n, 1.0), std::max(eff.ll * n, 1.0), std::max(eff.lg * n, 1.0),
                             std::max(eff.gl * n, 1.0), t.safety_factor, th, seed);
        pc = choice.config;
        choice_json = {{"infeasible", choice.infeasible},
                       {"prediction_rel_variance", choice.prediction_rel_variance},
                       {"bound", choice.bound}};
    }

    TriggerStream ts(pc);
    for (std::size_t i = 0; i < scores.size(); ++i) ts.process(scores.r1[i], scores.r2[i]);
    const TriggerOutput& out = ts.output();

    json ledger = json::parse(out.ledger_json());
    ledger["estimated_rate"] = estimate_rate(eff, pc);
    ledger["calibration_efficiencies"] = {{"ll", eff.ll}, {"lg", eff.lg}, {"gl", eff.gl}, {"gg", eff.gg}};
    if (!choice_json.is_null()) ledger["auto_prescale"] = choice_json;
    write_text(g.out_dir / "ledger.json", ledger.dump(2));

    std::vector<std::size_t> idx;
    std::ofstream kept_csv(g.out_dir / "kept.csv", std::ios::trunc);
    kept_csv << "index,region,weight,r1,r2\n";
    for (const auto& e : out.events) {
        idx.push_back(e.index);
        kept_csv << e.index << ',' << to_string(e.region) << ',' << e.weight << ',' << format_double(scores.r1[e.index])
                 << ',' << format_double(scores.r2[e.index]) << '\n';
    }
    write_events(g.out_dir / "kept.evt", stream.rows(idx));

    std::optional<std::int64_t> truth;
    if (stream.has_labels()) truth = count_regions(scores.background().r1, scores.background().r2, th).n_gg;
    json offline;
    try {
        offline = report_json(offline_abcd_from_stream(out, truth));
    } catch (const UndefinedPredictionError& e) {
        offline = {{"error", e.what()}};
    }
    write_text(g.out_dir / "offline_abcd.json", offline.dump(2));
    std::cout << "kept " << out.total_kept() << " of " << out.total_seen() << " events (fraction "
              << out.kept_fraction() << ", estimated " << ledger["estimated_rate"].get<double>() << ")\n";
    if (offline.contains("error")) throw UndefinedPredictionError(offline["error"].get<std::string>());
}

void cmd_report(const Global& g) {
    std::ostringstream md;
    md << "# Run report: " << g.out_dir.string() << "\n\n";
    bool any = false;
    if (fs::exists(g.out_dir / "history.csv")) {
        const CsvTable h = read_csv(g.out_dir / "history.csv");
        md << "## Training\n\nepochs: " << h.rows.size() << "\n";
        if (!h.rows.empty()) {
            const std::size_t col = h.column("test_total");
            double best = INFINITY;
            std::size_t at = 0;
            for (std::size_t i = 0; i < h.rows.size(); ++i) {
                const double v = parse_double(h.rows[i][col], i + 2);
                if (v < best) best = v, at = i + 1;
            }
            md << "best test loss: " << best << " (epoch " << at << ")\n";
        }
        md << '\n';
        any = true;
    }
    if (fs::exists(g.out_dir / "evaluation.json")) {
        const json e = read_json(g.out_dir / "evaluation.json");
        md << "## Evaluation\n\nbackground events: " << e["n_background"] << "  \nbackground dCorr: "
           << e["background_dcorr"] << "  \nmax |closure - 1| at efficiency >= 0.05: "
           << e["max_closure_deviation_eff_ge_0.05"] << "  \nmax background-only significance: "
           << e["max_background_significance"] << "\n\n";
        md << "| class | SIC ae1 | SIC ae2 | SIC combined | max significance |\n|---|---|---|---|---|\n";
        for (const auto& k : e["classes"])
            md << "| " << k["label"] << " | " << k["ae1"]["max_sic"] << " | " << k["ae2"]["max_sic"] << " | "
               << k["combined"]["max_sic"] << " | " << k["max_significance_uncorrected"] << " |\n";
        md << '\n';
        any = true;
    }
    if (fs::exists(g.out_dir / "closure.json")) {
        const json e = read_json(g.out_dir / "closure.json");
        md << "## Closure\n\n| efficiency | ratio | observed |\n|---|---|---|\n";
        for (const auto& r : e["rows"])
            md << "| " << r["eff"] << " | " << r["closure_ratio"] << " | " << r["observed"] << " |\n";
        md << '\n';
        any = true;
    }
    if (fs::exists(g.out_dir / "ledger.json")) {
        const json l = read_json(g.out_dir / "ledger.json");
        md << "## Trigger\n\nkept fraction: " << l["kept_fraction"] << " (estimated " << l["estimated_rate"]
           << ")  \nprescales ll/lg/gl: " << l["regions"]["ll"]["prescale"] << '/' << l["regions"]["lg"]["prescale"]
           << '/' << l["regions"]["gl"]["prescale"] << "\n";
        if (fs::exists(g.out_dir / "offline_abcd.json"))
            md << "offline ABCD: " << read_json(g.out_dir / "offline_abcd.json").dump() << "\n";
        md << '\n';
        any = true;
    }
    if (!any) throw DataError("no run outputs found in '" + g.out_dir.string() + "'");
    write_text(g.out_dir / "report.md", md.str());
    std::cout << md.str();
}

}  // namespace dae::cli
