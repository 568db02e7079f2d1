#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dae/experiment.hpp"

namespace dae::cli {

struct Global {
    std::optional<std::filesystem::path> config_path;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir = ".";
    bool deterministic = false;
};

struct GenArgs {
    bool background = false;
    std::string signal;
    std::vector<std::string> mix;
    std::size_t n = 100000;
    double fraction = 0.001;
    std::string output;
    int features_per_object = 0;  // 0: take the config layout
};
void cmd_gen(const Global& g, const GenArgs& a);

struct TrainArgs {
    std::string train_path;
    std::string test_path;
    bool single = false;
    std::optional<double> lambda;
    std::optional<int> epochs;
    std::optional<int> batch_size;
    std::optional<int> patience;
    std::optional<int> loss_power;
    bool exempt_padding = false;
    std::string output = "model.dae";
};
void cmd_train(const Global& g, const TrainArgs& a);

struct ScoreSource {
    std::string model;
    std::string data;
    std::string scores;  // CSV with r1,r2[,label], replaces model + data
};

struct EvalArgs {
    ScoreSource source;
    std::string grid;  // "NxM"
};
void cmd_eval(const Global& g, const EvalArgs& a);

struct ScanArgs {
    ScoreSource source;
    std::string grid;
};
void cmd_scan(const Global& g, const ScanArgs& a);

void cmd_closure(const Global& g, const ScoreSource& source);

struct TriggerArgs {
    std::string model;
    std::string stream;
    std::string calibration;
    std::optional<double> eff1;
    std::optional<double> eff2;
    std::optional<std::int64_t> prescale;
    std::optional<std::int64_t> prescale_ll;
    std::optional<std::int64_t> prescale_lg;
    std::optional<std::int64_t> prescale_gl;
    bool auto_prescale = false;
    std::optional<double> safety_factor;
};
void cmd_trigger(const Global& g, const TriggerArgs& a);

void cmd_report(const Global& g);

}  // namespace dae::cli
