#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "dae/abcd.hpp"
#include "dae/error.hpp"
#include "dae/metrics.hpp"
#include "oracles.hpp"

using namespace dae;

TEST(Roc, HandEnumeration) {
    const std::vector<double> bg = {0.1, 0.4, 0.35};
    const std::vector<double> sg = {0.8, 0.4, 0.2};
    const CurveTable t = roc(bg, sg);
    const std::vector<std::pair<double, double>> expected = {
        {0.0, 0.0}, {0.0, 1.0 / 3}, {1.0 / 3, 2.0 / 3}, {2.0 / 3, 2.0 / 3}, {2.0 / 3, 1.0}, {1.0, 1.0}};
    const std::vector<double> cuts = {0.8, 0.4, 0.35, 0.2, 0.1};
    ASSERT_EQ(t.rows.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_EQ(t.rows[i].fpr, expected[i].first) << i;
        EXPECT_EQ(t.rows[i].tpr, expected[i].second) << i;
        if (i < cuts.size()) { EXPECT_EQ(t.rows[i].threshold, cuts[i]); }
    }
    EXPECT_TRUE(std::isinf(t.rows.back().threshold));
}

TEST(Roc, PerfectSeparation) {
    const std::vector<double> bg = {1, 2, 3};
    const std::vector<double> sg = {10, 11};
    const CurveTable t = roc(bg, sg);
    bool through = false;
    for (const auto& r : t.rows) through |= r.fpr == 0.0 && r.tpr == 1.0;
    EXPECT_TRUE(through);
    EXPECT_THROW(roc(std::vector<double>{}, sg), DataError);
    EXPECT_THROW(roc(bg, std::vector<double>{}), DataError);
}

TEST(Roc, OrderedAndRandomClassifier) {
    const auto bg = oracle::normal_vector(100000, 1);
    const auto sg = oracle::normal_vector(100000, 2);
    const CurveTable t = sic(roc(bg, sg));
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        EXPECT_LE(t.rows[i - 1].fpr, t.rows[i].fpr);
        EXPECT_LE(t.rows[i - 1].tpr, t.rows[i].tpr);
        EXPECT_GT(t.rows[i - 1].threshold, t.rows[i].threshold);
    }
    for (std::size_t i = 0; i < t.rows.size(); i += 997) {
        const auto& r = t.rows[i];
        const double sigma = std::sqrt(r.fpr * (1 - r.fpr) / 1e5 + r.tpr * (1 - r.tpr) / 1e5);
        EXPECT_NEAR(r.tpr, r.fpr, 3 * sigma + 1e-12);
        if (!r.flagged) { EXPECT_LE(r.sic, 1.0 + 3 * std::sqrt(r.tpr * (1 - r.tpr) / 1e5) / std::sqrt(r.fpr)); }
    }
}

TEST(Sic, ArithmeticAndFlags) {
    CurveTable t;
    CurveRow a;
    a.fpr = 0.01;
    a.tpr = 0.5;
    a.n_background_pass = 100;
    CurveRow low = a;
    low.n_background_pass = 24;
    CurveRow zero;
    zero.tpr = 0.2;
    zero.n_background_pass = 30;  // inconsistent on purpose: FPR = 0 must still be flagged
    t.rows = {zero, low, a};
    const CurveTable s = sic(t);
    EXPECT_TRUE(s.rows[0].flagged);
    EXPECT_TRUE(std::isnan(s.rows[0].sic));
    EXPECT_TRUE(s.rows[1].flagged);
    EXPECT_FALSE(s.rows[2].flagged);
    EXPECT_DOUBLE_EQ(s.rows[2].sic, 5.0);
    const CurveSummary sum = summarize(s);
    EXPECT_TRUE(sum.valid);
    EXPECT_DOUBLE_EQ(sum.max_sic, 5.0);
    EXPECT_EQ(sum.flagged_rows, 2u);
    EXPECT_FALSE(summarize(sic(t, 1000)).valid);
}

TEST(Sic, LowYieldTailExcludedFromMaximum) {
    std::vector<double> bg(1000);
    for (std::size_t i = 0; i < bg.size(); ++i) bg[i] = static_cast<double>(i);
    const std::vector<double> sg = {5000, 5001, 500};
    const CurveTable t = sic(roc(bg, sg));
    const CurveSummary s = summarize(t);
    EXPECT_GE(s.fpr_at_max * 1000, 25.0);
    for (const auto& r : t.rows)
        if (r.n_background_pass < 25) { EXPECT_TRUE(r.flagged); }
}

TEST(SummaryJson, Keys) {
    CurveSummary s;
    s.valid = true;
    s.max_sic = 2.5;
    s.flagged_rows = 3;
    const auto j = nlohmann::json::parse(s.to_json());
    EXPECT_EQ(j["max_sic"].get<double>(), 2.5);
    EXPECT_EQ(j["flagged_rows"].get<int>(), 3);
    EXPECT_TRUE(j.contains("fpr_at_max"));
    EXPECT_TRUE(j.contains("threshold_at_max"));
}

TEST(CombinedDiagonal, IndependentFactorizes) {
    const std::size_t n = 400000;
    const auto b1 = oracle::normal_vector(n, 3);
    const auto b2 = oracle::normal_vector(n, 4);
    const auto s1 = oracle::normal_vector(1000, 5, 1.0, 1.0);
    const auto s2 = oracle::normal_vector(1000, 6, 1.0, 1.0);
    const std::vector<double> effs = {0.3, 0.01, 0.1, 0.05};
    const CurveTable t = combined_diagonal_sic(b1, s1, b2, s2, effs);
    ASSERT_EQ(t.rows.size(), 4u);
    EXPECT_EQ(t.rows.front().threshold, 0.01);  // sorted
    for (const auto& r : t.rows) {
        const double e2 = r.threshold * r.threshold;
        EXPECT_NEAR(r.fpr, e2, 3 * std::sqrt(e2 / n));
    }
}

TEST(CombinedDiagonal, MediansMatchBruteForce) {
    const auto b1 = oracle::normal_vector(10001, 7);
    const auto b2 = oracle::normal_vector(10001, 8);
    const auto s1 = oracle::normal_vector(501, 9, 0.5, 1.0);
    const auto s2 = oracle::normal_vector(501, 10, 0.5, 1.0);
    const std::vector<double> effs = {0.5};
    const CurveRow r = combined_diagonal_sic(b1, s1, b2, s2, effs).rows[0];
    std::vector<double> sorted1 = b1, sorted2 = b2;
    std::sort(sorted1.begin(), sorted1.end());
    std::sort(sorted2.begin(), sorted2.end());
    const double m1 = sorted1[5000], m2 = sorted2[5000];  // k = ceil(0.5 * 10001) = 5001st smallest
    std::int64_t nb = 0, ns = 0;
    for (std::size_t i = 0; i < b1.size(); ++i) nb += b1[i] > m1 && b2[i] > m2;
    for (std::size_t i = 0; i < s1.size(); ++i) ns += s1[i] > m1 && s2[i] > m2;
    EXPECT_EQ(r.c1, m1);
    EXPECT_EQ(r.c2, m2);
    EXPECT_EQ(r.n_background_pass, nb);
    EXPECT_EQ(r.tpr, static_cast<double>(ns) / 501);
}

TEST(CombinedDiagonal, DuplicatedAxisReducesToSingle) {
    const auto bg = oracle::normal_vector(20000, 11);
    const auto sg = oracle::normal_vector(2000, 12, 1.0, 1.0);
    const std::vector<double> effs = {0.02, 0.1, 0.4};
    const CurveTable combined = combined_diagonal_sic(bg, sg, bg, sg, effs);
    for (const auto& r : combined.rows) {
        EXPECT_EQ(r.c1, r.c2);
        EXPECT_NEAR(r.fpr, r.threshold, 1.0 / 20000);
        std::int64_t pass = 0;
        for (double s : sg) pass += s > r.c1;
        EXPECT_EQ(r.tpr, static_cast<double>(pass) / 2000);
    }
}

TEST(CurveTable, CsvHeaders) {
    const auto dir = std::filesystem::temp_directory_path() / "dae_metrics_test";
    std::filesystem::create_directories(dir);
    CurveTable t;
    t.rows.push_back(CurveRow{});
    t.write_csv(dir / "single.csv");
    t.kind = CurveKind::diagonal;
    t.write_csv(dir / "diag.csv");
    std::string line;
    std::ifstream a(dir / "single.csv");
    std::getline(a, line);
    EXPECT_EQ(line, "threshold,fpr,tpr,sic,n_bg_pass,flagged");
    std::ifstream b(dir / "diag.csv");
    std::getline(b, line);
    EXPECT_EQ(line, "eff_axis,c1,c2,fpr,tpr,sic,n_bg_pass,flagged");
    std::filesystem::remove_all(dir);
}

TEST(LogSpace, Endpoints) {
    const auto v = log_space(1e-3, 1e-1, 3);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_DOUBLE_EQ(v[0], 1e-3);
    EXPECT_NEAR(v[1], 1e-2, 1e-15);
    EXPECT_NEAR(v[2], 1e-1, 1e-15);
    EXPECT_THROW(log_space(0.0, 1.0, 3), ConfigError);
}
