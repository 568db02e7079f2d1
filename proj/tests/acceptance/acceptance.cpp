// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero when any evaluated criterion fails.
//
//   dae_acceptance --quick            exact property suites only (1 2 3 8 9 11)
//   dae_acceptance --work-dir DIR     everything, trained models cached in DIR
//   dae_acceptance --only 4,5 --reuse

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dae/abcd.hpp"
#include "dae/analysis.hpp"
#include "dae/autoencoder.hpp"
#include "dae/checkpoint.hpp"
#include "dae/disco.hpp"
#include "dae/error.hpp"
#include "dae/events.hpp"
#include "dae/experiment.hpp"
#include "dae/generator.hpp"
#include "dae/trigger.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace dae;
namespace fs = std::filesystem;

namespace {

std::string format(const char* fmt, ...) {
    char buf[1024];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void log(const std::string& line) {
    std::fprintf(stderr, "%s\n", line.c_str());
    std::fflush(stderr);
}

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

// ---------------------------------------------------------------- criterion 1

struct GradientTally {
    double max_rel = 0.0;
    long checked = 0;

    void add(double analytic, double numeric) {
        max_rel = std::max(max_rel, oracle::relative_error(analytic, numeric));
        ++checked;
    }
};

GradientTally dense_layer_gradients() {
    const std::vector<std::vector<int>> archs = {{3, 4, 2}, {4, 5, 3, 2}, {2, 6, 4, 3}, {5, 4, 4, 5}, {3, 3, 3, 3, 3}};
    const double h = 1e-5;
    GradientTally t;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto& sizes = archs[seed % archs.size()];
        Mlp m = init_mlp(sizes, {Activation::relu, seed % 2 ? Activation::linear : Activation::relu}, seed);
        fixture::randomize(m, seed + 100, 0.7);
        if (m.parameter_count() > 100) throw ContractError("gradient net too large");
        Matrix x = fixture::random_matrix(4, sizes.front(), seed + 200);
        const Matrix proj = fixture::random_matrix(4, sizes.back(), seed + 300);
        auto loss = [&] { return forward(m, x).output.cwiseProduct(proj).sum(); };
        const BackwardResult g = backward(m, forward(m, x), proj);
        const std::vector<bool> base = fixture::relu_pattern(m, x);
        auto check = [&](double& p, double analytic) {
            const double saved = p;
            bool same = true;
            for (double dx : {-h, h}) {
                p = saved + dx;
                same = same && fixture::relu_pattern(m, x) == base;
            }
            p = saved;
            if (same) t.add(analytic, oracle::central_difference(loss, p, h));
        };
        for (std::size_t k = 0; k < m.layers().size(); ++k) {
            for (Eigen::Index i = 0; i < m.layers()[k].weights.size(); ++i)
                check(m.mutable_layers()[k].weights.data()[i], g.params.weights[k].data()[i]);
            for (Eigen::Index i = 0; i < m.layers()[k].bias.size(); ++i)
                check(m.mutable_layers()[k].bias[i], g.params.bias[k][i]);
        }
        for (Eigen::Index i = 0; i < x.size(); ++i) check(x.data()[i], g.input_gradient.data()[i]);
    }
    return t;
}

GradientTally reconstruction_gradients() {
    const std::vector<int> widths = {4, 2};
    const double h = 1e-5;
    GradientTally t;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Autoencoder ae = make_autoencoder(5, widths, seed);
        fixture::randomize(ae.encoder, seed + 1, 0.6);
        fixture::randomize(ae.decoder, seed + 2, 0.6);
        const Matrix x = fixture::random_matrix(7, 5, seed + 3);
        const int p = seed % 2 ? 1 : 2;
        const AutoencoderGradients g = reconstruction_loss_gradient(ae, x, p);
        auto loss = [&] {
            double l = 0.0;
            reconstruction_loss_gradient(ae, x, p, &l);
            return l;
        };
        const std::vector<bool> base = fixture::relu_pattern(ae, x);
        fixture::each_parameter(ae, g, [&](double& param, double analytic) {
            const double saved = param;
            bool same = true;
            for (double dx : {-h, h}) {
                param = saved + dx;
                same = same && fixture::relu_pattern(ae, x) == base;
            }
            param = saved;
            if (same) t.add(analytic, oracle::central_difference(loss, param, h));
        });
    }
    return t;
}

GradientTally disco_gradients() {
    const double h = 1e-5;
    GradientTally t;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const std::size_t n = 3 + seed;
        auto u = oracle::normal_vector(n, 100 + seed);
        auto v = oracle::normal_vector(n, 200 + seed);
        for (std::size_t i = 0; i < n; ++i) v[i] += 0.7 * u[i];
        const DiscoGradient g = disco_squared_with_gradient(u, v);
        auto value = [&] { return disco_squared_with_gradient(u, v).value; };
        for (std::size_t i = 0; i < n; ++i) {
            t.add(g.du[i], oracle::central_difference(value, u[i], h));
            t.add(g.dv[i], oracle::central_difference(value, v[i], h));
        }
    }
    return t;
}

// Joint objective of two small autoencoders. The fourth-order stencil is exact for
// the reconstruction terms inside one ReLU region, so a wide step keeps round-off low.
GradientTally joint_loss_gradients() {
    const std::vector<int> widths = {3, 2};
    const double h = 3e-3;
    GradientTally t;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        DualAutoencoder m = make_dual_autoencoder(4, widths, seed);
        if (count_parameters(m) > 100) throw ContractError("gradient net too large");
        fixture::randomize(m.ae1.encoder, seed + 10, 0.6);
        fixture::randomize(m.ae1.decoder, seed + 20, 0.6);
        fixture::randomize(m.ae2.encoder, seed + 30, 0.6);
        fixture::randomize(m.ae2.decoder, seed + 40, 0.6);
        const Matrix x = fixture::random_matrix(12, 4, seed + 50);
        const int p = seed % 2 ? 1 : 2;
        const double lambda = seed % 4 ? 100.0 : 0.0;
        const LossGradient g = total_loss_gradient(m, x, lambda, p);
        auto loss = [&] { return total_loss(m, x, lambda, p).total; };
        const std::vector<bool> order = fixture::score_order(m, x);
        for (Autoencoder* ae : {&m.ae1, &m.ae2}) {
            const std::vector<bool> base = fixture::relu_pattern(*ae, x);
            fixture::each_parameter(*ae, ae == &m.ae1 ? g.ae1 : g.ae2, [&](double& param, double analytic) {
                const double saved = param;
                bool same = true;
                for (double dx : {-2 * h, -h, h, 2 * h}) {
                    param = saved + dx;
                    same = same && fixture::relu_pattern(*ae, x) == base && fixture::score_order(m, x) == order;
                }
                param = saved;
                if (same) t.add(analytic, oracle::five_point_difference(loss, param, h));
            });
        }
    }
    return t;
}

Verdict criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    const std::vector<std::pair<const char*, std::function<GradientTally()>>> suites = {
        {"dense", dense_layer_gradients},
        {"recon", reconstruction_gradients},
        {"disco2", disco_gradients},
        {"joint", joint_loss_gradients},
    };
    for (const auto& [name, run] : suites) {
        const GradientTally t = run();
        v.require(t.max_rel <= 1e-6, format("%s max rel %.2e > 1e-6", name, t.max_rel));
        v.require(t.checked >= 200, format("%s checked only %ld", name, t.checked));
        v.note(format("%s %ld checks max rel %.1e", name, t.checked, t.max_rel));
    }
    const double secs = seconds_since(t0);
    v.require(secs < 10.0, format("runtime %.1f s", secs));
    v.note(format("%.2f s", secs));
    return v;
}

// ---------------------------------------------------------------- criterion 2

Verdict criterion_disco() {
    Verdict v;
    double self_dev = 0.0;
    for (std::size_t n : {2, 10, 100, 1000, 5000}) {
        const auto u = oracle::normal_vector(n, n);
        self_dev = std::max(self_dev, std::abs(distance_correlation(u, u) - 1.0));
    }
    v.require(self_dev <= 1e-12, format("|dCorr(u,u) - 1| = %.1e", self_dev));

    double naive_dev = 0.0;
    for (std::size_t n = 2; n <= 64; ++n)
        for (std::uint64_t rep = 0; rep < 3; ++rep) {
            const auto u = oracle::normal_vector(n, 1000 * n + rep);
            auto w = oracle::normal_vector(n, 2000 * n + rep);
            for (std::size_t i = 0; i < n; ++i) w[i] += (rep * 0.5) * u[i] * u[i];
            naive_dev = std::max(naive_dev, std::abs(distance_correlation(u, w) - oracle::naive_dcorr(u, w)));
        }
    v.require(naive_dev <= 1e-12, format("naive oracle deviation %.1e", naive_dev));

    double indep = 0.0;
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
        const auto u = oracle::normal_vector(10000, 50 + rep);
        const auto w = oracle::normal_vector(10000, 60 + rep);
        indep = std::max(indep, distance_correlation(u, w));
    }
    v.require(indep < 0.05, format("independent dCorr %.4f", indep));

    double inv_dev = 0.0;
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
        const auto u = oracle::normal_vector(500, 70 + rep);
        auto w = oracle::normal_vector(500, 80 + rep);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += std::sin(3.0 * u[i]);
        const double base = distance_correlation(u, w);
        for (auto [a, b] : {std::pair{1.0, 1e3}, {7.5, -40.0}, {1e-3, 0.25}, {250.0, 3.0}}) {
            std::vector<double> ut(u.size()), wt(w.size());
            for (std::size_t i = 0; i < u.size(); ++i) {
                ut[i] = a * u[i] + b;
                wt[i] = (a + 1.0) * w[i] - b;
            }
            inv_dev = std::max(inv_dev, std::abs(distance_correlation(ut, wt) - base));
        }
    }
    v.require(inv_dev <= 1e-10, format("shift/scale deviation %.1e", inv_dev));
    v.note(format("self %.0e, naive %.0e, independent max %.4f, invariance %.0e", self_dev, naive_dev, indep, inv_dev));
    return v;
}

// ---------------------------------------------------------------- criterion 3

Verdict criterion_abcd_exactness() {
    Verdict v;
    const std::size_t n = 1000000;
    std::mt19937_64 rng(3);
    std::exponential_distribution<double> expo(1.0);
    std::lognormal_distribution<double> logn(0.0, 0.8);
    std::vector<double> r1(n), r2(n);
    for (std::size_t i = 0; i < n; ++i) r1[i] = expo(rng);
    for (std::size_t i = 0; i < n; ++i) r2[i] = logn(rng);
    for (double eff : {0.01, 0.05, 0.1, 0.3}) {
        const Thresholds c = diagonal_thresholds(r1, r2, eff);
        const RegionCounts k = count_regions(r1, r2, c);
        const double closure = abcd_prediction(k) / static_cast<double>(k.n_gg);
        const double sigma = closure * std::sqrt(1.0 / k.n_ll + 1.0 / k.n_lg + 1.0 / k.n_gl + 1.0 / k.n_gg);
        const double pulls = std::abs(closure - 1.0) / sigma;
        v.require(pulls <= 3.0, format("eff %.2f closure %.4f is %.1f sigma off", eff, closure, pulls));
        v.note(format("eff %.2f closure %.4f +- %.4f", eff, closure, sigma));
    }
    return v;
}

// ---------------------------------------------------------------- criterion 8

Verdict criterion_parameter_count() {
    Verdict v;
    const std::int64_t n57 = count_parameters(make_dual_autoencoder(57, kDefaultEncoderWidths, 0));
    const std::int64_t n72 = count_parameters(make_dual_autoencoder(72, kDefaultEncoderWidths, 0));
    v.require(n57 == 233084, format("input 57 gives %lld", static_cast<long long>(n57)));
    v.note(format("input 57: %lld, input 72: %lld", static_cast<long long>(n57), static_cast<long long>(n72)));
    return v;
}

// ---------------------------------------------------------------- criterion 9

Verdict criterion_trigger() {
    Verdict v;
    const std::size_t n = 400000;
    const auto r1 = oracle::normal_vector(n, 91);
    const auto r2 = oracle::normal_vector(n, 92);

    double worst_pull = 0.0;
    for (double eps : {0.02, 0.05, 0.2})
        for (std::int64_t p : {1, 2, 10, 100}) {
            const Thresholds c = diagonal_thresholds(r1, r2, eps);
            const PrescaleConfig config = PrescaleConfig::shared(p, c, 900 + p);
            const TriggerOutput out = run_trigger(r1, r2, config);
            const RegionCounts k = count_regions(r1, r2, c);
            const double dn = static_cast<double>(n);
            const RegionEfficiencies e{k.n_ll / dn, k.n_lg / dn, k.n_gl / dn, k.n_gg / dn};
            const double rate = estimate_rate(e, config);
            double var = 0.0;
            for (double x : {e.ll, e.lg, e.gl}) var += x * dn * (1.0 / p) * (1.0 - 1.0 / p);
            const double diff = std::abs(out.kept_fraction() - rate);
            if (var == 0.0) {
                v.require(diff == 0.0, format("P=1 eps %.2f kept %.6f vs %.6f", eps, out.kept_fraction(), rate));
                continue;
            }
            const double pull = diff / (std::sqrt(var) / dn);
            worst_pull = std::max(worst_pull, pull);
            v.require(pull <= 3.0, format("eps %.2f P %lld kept fraction %.1f sigma off", eps, static_cast<long long>(p), pull));
        }

    {
        const Thresholds c = diagonal_thresholds(r1, r2, 0.1);
        const TriggerOutput out = run_trigger(r1, r2, PrescaleConfig{1, 1, 1, c, 5});
        const AbcdReport offline = offline_abcd_from_stream(out);
        ScoredSample sample;
        sample.r1 = r1;
        sample.r2 = r2;
        const AbcdReport direct = abcd_report(sample, c);
        v.require(offline.counts == direct.counts && offline.predicted_sr == direct.predicted_sr &&
                      offline.observed_sr == direct.observed_sr &&
                      offline.significance_uncorrected == direct.significance_uncorrected,
                  "P=1 offline ABCD differs from direct");
    }

    double bias_pull = 0.0;
    {
        const Thresholds c = diagonal_thresholds(r1, r2, 0.1);
        const double truth = abcd_prediction(count_regions(r1, r2, c));
        const int reps = 100;
        std::vector<double> preds;
        for (int rep = 0; rep < reps; ++rep)
            preds.push_back(offline_abcd_from_stream(run_trigger(r1, r2, PrescaleConfig::shared(10, c, 5000 + rep)))
                                .predicted_sr);
        const double mean = std::accumulate(preds.begin(), preds.end(), 0.0) / reps;
        double ss = 0.0;
        for (double x : preds) ss += (x - mean) * (x - mean);
        const double sem = std::sqrt(ss / (reps - 1)) / std::sqrt(static_cast<double>(reps));
        bias_pull = std::abs(mean - truth) / sem;
        v.require(bias_pull <= 3.0, format("P=10 prediction mean %.2f vs %.2f (%.1f sigma)", mean, truth, bias_pull));
    }

    {
        for (double eps : {0.001, 0.01, 0.05, 0.1, 0.2, 0.25})
            v.require(estimate_rate(eps, PrescaleConfig{}) == 4 * eps, format("estimate_rate(%.3f) != 4 eps", eps));
        // 100 x 100 grid with both cuts at the median: every region holds exactly a quarter.
        std::vector<double> g1, g2;
        for (int i = 0; i < 100; ++i)
            for (int j = 0; j < 100; ++j) {
                g1.push_back(i);
                g2.push_back(j);
            }
        const TriggerOutput out = run_trigger(g1, g2, PrescaleConfig{1, 1, 1, {49.0, 49.0}, 0});
        bool equal = true;
        for (int r = 0; r < 4; ++r) equal = equal && out.seen[r] == 2500;
        v.require(equal && out.kept_fraction() == 4 * 0.25, "equal-region stream does not keep 4 eps");
    }
    v.note(format("worst kept-fraction pull %.2f, P=10 bias pull %.2f", worst_pull, bias_pull));
    return v;
}

// --------------------------------------------------------------- criterion 11

template <class Fn>
std::uint64_t format_offset(Fn&& fn) {
    try {
        fn();
    } catch (const FormatError& e) {
        return e.offset();
    } catch (const std::exception&) {
    }
    return std::numeric_limits<std::uint64_t>::max();
}

bool same_bits(const Mlp& a, const Mlp& b) {
    if (a.layer_sizes() != b.layer_sizes()) return false;
    for (std::size_t k = 0; k < a.layers().size(); ++k) {
        const auto& la = a.layers()[k];
        const auto& lb = b.layers()[k];
        if (la.activation != lb.activation) return false;
        if (std::memcmp(la.weights.data(), lb.weights.data(), sizeof(double) * la.weights.size()) != 0) return false;
        if (std::memcmp(la.bias.data(), lb.bias.data(), sizeof(double) * la.bias.size()) != 0) return false;
    }
    return true;
}

Verdict criterion_formats() {
    Verdict v;
    TempDir dir("acceptance");

    for (int fpo : {4, 3}) {
        GeneratorConfig g;
        g.layout.features_per_object = fpo;
        const Dataset d = generate_background(2000, 11, g);
        write_events(dir / "a.evt", d);
        const Dataset back = read_events(dir / "a.evt");
        v.require(back.layout == d.layout && back.labels == d.labels &&
                      std::memcmp(back.events.data(), d.events.data(), sizeof(double) * d.events.size()) == 0,
                  format("EVT1 round trip with %d features per object", fpo));
    }

    const Dataset d = generate_background(10, 12);
    write_events(dir / "ok.evt", d);
    const std::string good = read_bytes(dir / "ok.evt");
    const fs::path bad = dir / "bad.evt";
    auto evt_case = [&](const std::string& bytes, std::uint64_t expected, const char* what) {
        write_bytes(bad, bytes);
        const std::uint64_t got = format_offset([&] { read_events(bad); });
        v.require(got == expected, format("EVT1 %s: offset %llu, expected %llu", what,
                                          static_cast<unsigned long long>(got),
                                          static_cast<unsigned long long>(expected)));
    };
    std::string b = good;
    b[0] = 'X';
    evt_case(b, 0, "magic");
    b = good;
    b[4] = 2;
    evt_case(b, 4, "version");
    b = good;
    b[6] = 1;
    evt_case(b, 6, "reserved");
    evt_case(good.substr(0, 100), 100, "truncated body");
    evt_case(good + "xx", good.size(), "trailing bytes");

    DualAutoencoder m = make_dual_autoencoder(72, kDefaultEncoderWidths, 13);
    m.stats = fit_standardization(generate_background(500, 14), true);
    TrainConfig tc;
    tc.lambda = 100.0;
    tc.seed = 15;
    write_checkpoint(dir / "m.dae", Checkpoint::from_dual(m, tc));
    const DualAutoencoder back = read_checkpoint(dir / "m.dae").to_dual();
    bool exact = same_bits(back.ae1.encoder, m.ae1.encoder) && same_bits(back.ae1.decoder, m.ae1.decoder) &&
                 same_bits(back.ae2.encoder, m.ae2.encoder) && same_bits(back.ae2.decoder, m.ae2.decoder);
    exact = exact && back.stats && back.stats->mean == m.stats->mean && back.stats->stddev == m.stats->stddev &&
            back.stats->exempt_padding == m.stats->exempt_padding;
    v.require(exact, "DAE1 round trip not bit-exact");
    write_checkpoint(dir / "m2.dae", read_checkpoint(dir / "m.dae"));
    v.require(read_bytes(dir / "m.dae") == read_bytes(dir / "m2.dae"), "DAE1 rewrite changes bytes");

    const std::string ck = read_bytes(dir / "m.dae");
    std::uint32_t meta_len = 0;
    std::memcpy(&meta_len, ck.data() + 4, 4);
    const fs::path bad_ck = dir / "bad.dae";
    auto dae_case = [&](const std::string& bytes, std::uint64_t expected, const char* what) {
        write_bytes(bad_ck, bytes);
        const std::uint64_t got = format_offset([&] { read_checkpoint(bad_ck); });
        v.require(got == expected, format("DAE1 %s: offset %llu, expected %llu", what,
                                          static_cast<unsigned long long>(got),
                                          static_cast<unsigned long long>(expected)));
    };
    b = ck;
    b[2] = 'Z';
    dae_case(b, 0, "magic");
    dae_case(ck.substr(0, ck.size() - 5), ck.size() - 5, "truncated parameters");
    dae_case(ck + "z", ck.size(), "trailing bytes");
    b = ck;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::size_t at = 8 + meta_len + 17 * sizeof(double);
    std::memcpy(b.data() + at, &nan, sizeof(double));
    dae_case(b, at, "non-finite parameter");
    v.note("EVT1 and DAE1 round trips bit-exact, 9 corruptions rejected at their offsets");
    return v;
}

// ------------------------------------------------------- trained-model criteria

constexpr std::uint64_t kDataSeed = 20211;
constexpr int kTrainingEpochs = 40;
constexpr int kClosureBatch = 10000;
constexpr int kDecorrelationBatch = 2000;
constexpr double kClosureLambda = 10000.0;
constexpr std::size_t kClosureEvents = 1000000;
constexpr std::size_t kSignalPerClass = 20000;
constexpr std::array kSignalKinds = {SignalKind::extra_lepton, SignalKind::hard_object, SignalKind::correlated_pair};

ExperimentConfig desk_config(std::uint64_t seed, double lambda, int batch_size) {
    ExperimentConfig c;
    c.seed = seed;
    c.exempt_padding = true;
    c.train.lambda = lambda;
    c.train.batch_size = batch_size;
    c.train.max_epochs = kTrainingEpochs;
    c.train.patience = 10;
    return c;
}

struct Samples {
    Dataset train;
    Dataset test;
    Dataset eval;
    std::vector<Dataset> signal;    // kSignalPerClass events per class
    std::vector<Dataset> injected;  // injected_count(n_eval, fraction) events per class
};

Samples make_samples() {
    const ExperimentConfig c = desk_config(0, 0.0, kClosureBatch);
    Samples s;
    s.train = generate_background(c.data.n_train, derive_seed(kDataSeed, "train"), c.generator);
    s.test = generate_background(c.data.n_test, derive_seed(kDataSeed, "test"), c.generator);
    s.eval = generate_background(c.data.n_eval, derive_seed(kDataSeed, "eval"), c.generator);
    const std::size_t n_inj = injected_count(c.data.n_eval, c.data.injection_fraction);
    for (SignalKind kind : kSignalKinds) {
        const std::string name = to_string(kind);
        s.signal.push_back(generate_signal(kSignalPerClass, derive_seed(kDataSeed, "signal-" + name), kind, c.generator));
        s.injected.push_back(generate_signal(n_inj, derive_seed(kDataSeed, "injected-" + name), kind, c.generator));
    }
    return s;
}

class ModelStore {
public:
    ModelStore(fs::path dir, bool reuse, const Samples& samples) : dir_(std::move(dir)), reuse_(reuse), samples_(samples) {
        fs::create_directories(dir_);
    }

    DualAutoencoder get(const std::string& tag, const ExperimentConfig& config) {
        const fs::path path = dir_ / (tag + ".dae");
        if (reuse_ && fs::exists(path)) {
            log("reusing " + path.string());
            return read_checkpoint(path).to_dual();
        }
        const auto t0 = std::chrono::steady_clock::now();
        log(format("training %s (lambda %g, seed %llu)", tag.c_str(), config.train.lambda,
                   static_cast<unsigned long long>(config.seed)));
        TrainResult r = fit_dual(samples_.train, samples_.test, config, [&](const EpochRecord& e) {
            log(format("  %s epoch %d test total %.4f test disco2 %.5f (%.0f s)", tag.c_str(), e.epoch, e.test_total,
                       e.test_disco, seconds_since(t0)));
        });
        write_checkpoint(path, Checkpoint::from_dual(r.model, config.train));
        r.history.write_csv(dir_ / (tag + "_history.csv"));
        log(format("trained %s in %.0f s, best epoch %d", tag.c_str(), seconds_since(t0), r.history.best_epoch));
        return std::move(r.model);
    }

private:
    fs::path dir_;
    bool reuse_;
    const Samples& samples_;
};

double validation_dcorr(const DualAutoencoder& model, const Dataset& test) {
    const ScoredSample s = score(model, test);
    const std::size_t n = std::min(kDcorrSubsample, s.size());
    return distance_correlation(std::span(s.r1).first(n), std::span(s.r2).first(n));
}

ScoredSample concat(const ScoredSample& a, const ScoredSample& b) {
    ScoredSample out = a;
    out.r1.insert(out.r1.end(), b.r1.begin(), b.r1.end());
    out.r2.insert(out.r2.end(), b.r2.begin(), b.r2.end());
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    return out;
}

double max_unflagged(const ScanTable& t, double ScanRow::*field) {
    double best = 0.0;
    for (const ScanRow& r : t.rows)
        if (!r.flagged) best = std::max(best, r.*field);
    return best;
}

/// Scores of one trained model on the fixed evaluation samples.
struct ModelScores {
    ScoredSample background;
    std::vector<ScoredSample> signal;
    std::vector<ScoredSample> injected;
};

ModelScores score_all(const DualAutoencoder& model, const Samples& s) {
    ModelScores out;
    out.background = score(model, s.eval);
    for (std::size_t k = 0; k < kSignalKinds.size(); ++k) {
        out.signal.push_back(score(model, s.signal[k]));
        out.injected.push_back(score(model, s.injected[k]));
    }
    return out;
}

/// Largest uncorrected diagonal-scan significance per class at the injected fraction.
std::vector<double> injected_significances(const ModelScores& m, const ScanConfig& scan) {
    const auto grid = diagonal_grid(scan.efficiencies);
    std::vector<double> out;
    for (const ScoredSample& inj : m.injected)
        out.push_back(max_unflagged(threshold_scan(concat(m.background, inj), grid, scan.min_region_count),
                                    &ScanRow::sig_uncorr));
    return out;
}

Verdict criterion_decorrelation(ModelStore& store, const Samples& s) {
    Verdict v;
    const DualAutoencoder with = store.get("lambda100_b2000_seed1", desk_config(1, 100.0, kDecorrelationBatch));
    const DualAutoencoder without = store.get("lambda0_b2000_seed1", desk_config(1, 0.0, kDecorrelationBatch));
    const double d100 = validation_dcorr(with, s.test);
    const double d0 = validation_dcorr(without, s.test);
    v.require(d100 < 0.1, format("lambda=100 validation dCorr %.4f", d100));
    v.require(d0 >= 3.0 * d100, format("lambda=0 dCorr %.4f is less than 3x", d0));
    v.note(format("validation dCorr lambda=100 %.4f, lambda=0 %.4f (ratio %.1f)", d100, d0, d0 / d100));
    return v;
}

Verdict criterion_closure(const DualAutoencoder& model, const ModelScores& m, const ExperimentConfig& config) {
    Verdict v;
    const std::vector<double> effs = {0.05, 0.1, 0.2, 0.3};
    const auto grid = diagonal_grid(effs);
    const Dataset big = generate_background(kClosureEvents, derive_seed(kDataSeed, "closure"), config.generator);
    const ScanTable t = threshold_scan(score(model, big), grid, config.scan.min_region_count);
    for (const ScanRow& r : t.rows) {
        const bool ok = !r.flagged && std::abs(r.closure_ratio - 1.0) <= 0.05;
        v.require(ok, format("eff %.2f outside 1 +- 0.05", r.eff_axis1));
        v.note(format("eff %.2f: %.4f (SR %lld)", r.eff_axis1, r.closure_ratio,
                      static_cast<long long>(r.background_counts.n_gg)));
    }
    const ScanTable small = threshold_scan(m.background, grid, config.scan.min_region_count);
    std::string eval_note = "eval-size closure";
    for (const ScanRow& r : small.rows) eval_note += format(" %.3f", r.closure_ratio);
    v.note(eval_note);
    return v;
}

Verdict criterion_combined_sic(const ModelScores& m, const ScanConfig& scan) {
    Verdict v;
    ScoredSample all = m.background;
    for (const ScoredSample& sig : m.signal) all = concat(all, sig);
    const Evaluation e = evaluate(all, scan);
    int gains = 0;
    for (const ClassEvaluation& c : e.classes) {
        const double single = std::max(c.ae1.max_sic, c.ae2.max_sic);
        const bool gain = c.combined_summary.valid && c.combined_summary.max_sic > single;
        gains += gain;
        v.note(format("class %u combined %.2f vs best single %.2f", static_cast<unsigned>(c.label),
                      c.combined_summary.max_sic, single));
    }
    v.require(gains >= 2, format("combined gain on %d of 3 classes", gains));
    return v;
}

Verdict criterion_signal_recovery(const ModelScores& m, const ScanConfig& scan) {
    Verdict v;
    const std::vector<double> sig = injected_significances(m, scan);
    int recovered = 0;
    for (std::size_t k = 0; k < sig.size(); ++k) {
        recovered += sig[k] >= 1.5;
        v.note(format("class %zu max significance %.2f", k + 1, sig[k]));
    }
    const ScanTable bg = threshold_scan(m.background, diagonal_grid(scan.efficiencies), scan.min_region_count);
    const double bg_max = max_unflagged(bg, &ScanRow::sig_uncorr);
    v.note(format("background-only max %.2f", bg_max));
    v.require(recovered >= 2, format("significance >= 1.5 on %d of 3 classes", recovered));
    v.require(bg_max < 1.0, "background-only significance not below 1");
    return v;
}

Verdict criterion_seed_stability(const std::vector<double>& per_seed) {
    Verdict v;
    const double n = static_cast<double>(per_seed.size());
    const double mean = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : per_seed) ss += (x - mean) * (x - mean);
    const double rel = mean > 0.0 ? std::sqrt(ss / (n - 1.0)) / mean : std::numeric_limits<double>::infinity();
    std::string values = "per-seed mean max significance";
    for (double x : per_seed) values += format(" %.2f", x);
    v.note(values);
    v.note(format("relative std %.3f", rel));
    v.require(rel <= 0.15, "above 0.15");
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    bool quick = false;
    bool reuse = false;
    std::string work_dir = "acceptance_work";
    std::vector<int> only;
    app.add_flag("--quick", quick, "Only the criteria that need no trained model");
    app.add_flag("--reuse", reuse, "Load cached models from the work directory when present");
    app.add_option("--work-dir", work_dir, "Directory for trained models");
    app.add_option("--only", only, "Criterion numbers to evaluate")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    Eigen::setNbThreads(1);
    std::set<int> selected(only.begin(), only.end());
    const std::set<int> fast = {1, 2, 3, 8, 9, 11};
    auto wanted = [&](int id) {
        if (!selected.empty()) return selected.count(id) > 0 && (!quick || fast.count(id) > 0);
        return !quick || fast.count(id) > 0;
    };

    bool all_pass = true;
    auto run = [&](int id, const std::function<Verdict()>& fn) {
        if (!wanted(id)) return;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        all_pass = all_pass && v.pass;
        std::printf("criterion %2d: %s  %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    };

    run(1, criterion_gradients);
    run(2, criterion_disco);
    run(3, criterion_abcd_exactness);
    run(8, criterion_parameter_count);
    run(9, criterion_trigger);
    run(11, criterion_formats);

    const bool needs_models = wanted(4) || wanted(5) || wanted(6) || wanted(7) || wanted(10);
    if (needs_models) {
        const Samples samples = make_samples();
        ModelStore store(work_dir, reuse, samples);
        const ScanConfig scan;
        run(4, [&] { return criterion_decorrelation(store, samples); });

        if (wanted(5) || wanted(6) || wanted(7) || wanted(10)) {
            std::vector<double> per_seed;
            for (std::uint64_t seed = 1; seed <= (wanted(10) ? 5u : 1u); ++seed) {
                const ExperimentConfig config = desk_config(seed, kClosureLambda, kClosureBatch);
                const DualAutoencoder model = store.get(format("closure_seed%llu", static_cast<unsigned long long>(seed)), config);
                const ModelScores m = score_all(model, samples);
                const std::vector<double> sig = injected_significances(m, scan);
                per_seed.push_back(std::accumulate(sig.begin(), sig.end(), 0.0) / static_cast<double>(sig.size()));
                if (seed == 1) {
                    run(5, [&] { return criterion_closure(model, m, config); });
                    run(6, [&] { return criterion_combined_sic(m, scan); });
                    run(7, [&] { return criterion_signal_recovery(m, scan); });
                }
            }
            run(10, [&] { return criterion_seed_stability(per_seed); });
        }
    }

    std::printf("%s\n", all_pass ? "ALL PASS" : "SOME CRITERIA FAILED");
    return all_pass ? 0 : 1;
}
