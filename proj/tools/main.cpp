#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "dae/error.hpp"

namespace {

enum ExitCode { ok = 0, other = 1, config = 2, data = 3, contract = 4, divergence = 5 };

}  // namespace

int main(int argc, char** argv) {
    using namespace dae::cli;
    CLI::App app{"Decorrelated dual autoencoders: data generation, training, evaluation and trigger simulation"};
    app.require_subcommand(1);

    Global g;
    std::string config_path, out_dir = ".";
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Global seed (overrides the config)");
    app.add_option("--out-dir", out_dir, "Directory for all outputs");
    app.add_flag("--deterministic", g.deterministic, "Force single-threaded execution");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate background, signal or mixed event files");
    gen_cmd->add_flag("--background", gen.background, "Background events");
    gen_cmd->add_option("--signal", gen.signal, "Signal class: extra-lepton, hard-object or correlated-pair");
    gen_cmd->add_option("--mix", gen.mix, "Background and signal files to mix")->expected(2);
    gen_cmd->add_option("-n", gen.n, "Number of events");
    gen_cmd->add_option("--fraction", gen.fraction, "Signal fraction for --mix");
    gen_cmd->add_option("-o,--output", gen.output, "Output file name (.evt or .csv) inside --out-dir");
    gen_cmd->add_option("--features-per-object", gen.features_per_object, "3 or 4");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train the dual autoencoder (or the single baseline)");
    train_cmd->add_option("--train", train.train_path, "Training events (generated from the config when absent)");
    train_cmd->add_option("--test", train.test_path, "Test events for early stopping");
    train_cmd->add_flag("--single", train.single, "Train one autoencoder on reconstruction loss only");
    train_cmd->add_option("--lambda", train.lambda, "DisCo penalty weight");
    train_cmd->add_option("--epochs", train.epochs, "Maximum number of epochs");
    train_cmd->add_option("--batch-size", train.batch_size);
    train_cmd->add_option("--patience", train.patience, "Early-stopping patience in epochs");
    train_cmd->add_option("--loss-power", train.loss_power, "1 or 2");
    train_cmd->add_flag("--exempt-padding", train.exempt_padding, "Leave zero-padded slots out of standardization");
    train_cmd->add_option("-o,--output", train.output, "Checkpoint file name inside --out-dir");

    auto add_source = [](CLI::App* cmd, ScoreSource& s) {
        cmd->add_option("--model", s.model, "DAE1 checkpoint");
        cmd->add_option("--data", s.data, "Event file (EVT1 or CSV)");
        cmd->add_option("--scores", s.scores, "Score CSV with r1,r2[,label] instead of --model/--data");
    };
    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "Scores, ROC/SIC, closure and significance tables");
    add_source(eval_cmd, eval.source);
    eval_cmd->add_option("--grid", eval.grid, "Also write 2D SIC tables on an NxM efficiency grid, e.g. 20x20");

    ScanArgs scan;
    auto* scan_cmd = app.add_subcommand("scan", "2D threshold scan over per-axis efficiencies");
    add_source(scan_cmd, scan.source);
    scan_cmd->add_option("--grid", scan.grid, "NxM grid (default from the config)");

    ScoreSource closure;
    auto* closure_cmd = app.add_subcommand("closure", "ABCD closure on background events");
    add_source(closure_cmd, closure);

    TriggerArgs trig;
    auto* trig_cmd = app.add_subcommand("trigger-sim", "Prescaled online selection and offline ABCD");
    trig_cmd->add_option("--model", trig.model, "DAE1 checkpoint");
    trig_cmd->add_option("--stream", trig.stream, "Event stream file");
    trig_cmd->add_option("--calibration", trig.calibration, "Background file used to place the thresholds");
    trig_cmd->add_option("--eff1", trig.eff1, "Background efficiency of the R1 cut");
    trig_cmd->add_option("--eff2", trig.eff2, "Background efficiency of the R2 cut");
    trig_cmd->add_option("--prescale", trig.prescale, "Shared prescale of the three support regions");
    trig_cmd->add_option("--prescale-ll", trig.prescale_ll);
    trig_cmd->add_option("--prescale-lg", trig.prescale_lg);
    trig_cmd->add_option("--prescale-gl", trig.prescale_gl);
    trig_cmd->add_flag("--auto-prescale", trig.auto_prescale, "Choose prescales from the variance bound");
    trig_cmd->add_option("--safety-factor", trig.safety_factor);

    auto* report_cmd = app.add_subcommand("report", "Summarize the outputs found in --out-dir");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config;
    }
    if (!config_path.empty()) g.config_path = config_path;
    if (*seed_opt) g.seed = seed;
    g.out_dir = out_dir;

    try {
        if (*gen_cmd) cmd_gen(g, gen);
        else if (*train_cmd) cmd_train(g, train);
        else if (*eval_cmd) cmd_eval(g, eval);
        else if (*scan_cmd) cmd_scan(g, scan);
        else if (*closure_cmd) cmd_closure(g, closure);
        else if (*trig_cmd) cmd_trigger(g, trig);
        else if (*report_cmd) cmd_report(g);
        return ok;
    } catch (const dae::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return config;
    } catch (const dae::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data;
    } catch (const dae::ContractError& e) {
        std::cerr << "contract error: " << e.what() << '\n';
        return contract;
    } catch (const dae::DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << '\n';
        return divergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return other;
    }
}
