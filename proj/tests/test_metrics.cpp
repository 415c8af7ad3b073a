#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cwf/error.hpp"
#include "cwf/metrics.hpp"
#include "oracles.hpp"

using namespace cwf;

namespace {

std::vector<double> ar1(std::uint64_t seed, std::size_t n, double phi) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<double> x(n);
    double v = e(rng) / std::sqrt(1 - phi * phi);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = v;
        v = phi * v + e(rng);
    }
    return x;
}

// Labels c1, c2, c3, c1, ... and hand-made predictions.
struct Fixture {
    PredictionStream stream;
    LabeledDataset labels;
};

Fixture fixture() {
    using L = ClassLabel;
    const std::vector<L> actual = {L::up, L::up, L::down, L::same, L::down, L::up};
    const std::vector<Scores> scores = {
        {0.9, -1, -1},   // c1 strong, correct
        {0.2, -1, -1},   // c1 weak, correct
        {0.5, -1, -1},   // c1, wrong (down)
        {-1, 0.8, -1},   // c2, wrong (same)
        {-1, 0.3, -1},   // c2 weak, correct
        {-1, -1, 0.5},   // c3
    };
    Fixture f;
    f.labels.feature_names = {"x"};
    f.labels.rows = Matrix(actual.size(), 1);
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const auto t = from_unix(3600 * static_cast<long>(i));
        f.labels.timestamps.push_back(t);
        f.labels.labels.push_back(actual[i]);
        f.labels.responses.push_back(0.0);
        f.stream.predictions.push_back(predict_with_gamma(scores[i], 0.0, t));
        f.stream.epoch_of.push_back(0);
    }
    f.labels.class_counts = count_classes(f.labels.labels);
    return f;
}

}  // namespace

TEST(Confusion, PpvNpvByHand) {
    const auto f = fixture();
    const auto c0 = ppv_npv(f.stream, f.labels, 0.0);
    EXPECT_EQ(c0.predicted_positive, 3u);
    EXPECT_EQ(c0.true_positive, 2u);
    EXPECT_EQ(c0.predicted_negative, 2u);
    EXPECT_EQ(c0.true_negative, 1u);
    EXPECT_NEAR(*c0.ppv, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(*c0.npv, 0.5, 1e-15);
    const auto c1 = ppv_npv(f.stream, f.labels, 0.6);
    EXPECT_EQ(c1.predicted_positive, 1u);
    EXPECT_EQ(*c1.ppv, 1.0);
    EXPECT_EQ(*c1.npv, 0.0);
    const auto c2 = ppv_npv(f.stream, f.labels, 5.0);
    EXPECT_FALSE(c2.ppv);
    EXPECT_FALSE(c2.npv);
    EXPECT_NEAR(*overall_accuracy(f.stream, f.labels), 3.0 / 6.0, 1e-15);
}

TEST(Confusion, ModellessBarsAreExcludedFromAccuracy) {
    auto f = fixture();
    f.stream.predictions[2].has_model = false;
    f.stream.predictions[2].actionable = false;
    f.stream.predictions[2].scores.fill(std::nan(""));
    EXPECT_NEAR(*overall_accuracy(f.stream, f.labels), 3.0 / 5.0, 1e-15);
}

TEST(Confusion, UnlabeledPredictionsAreMisaligned) {
    auto f = fixture();
    f.stream.predictions.insert(f.stream.predictions.begin() + 1,
                                predict_with_gamma({1, 0, 0}, 0.0, from_unix(1800)));
    f.stream.epoch_of.push_back(0);
    EXPECT_THROW(ppv_npv(f.stream, f.labels, 0.0), ValidationError);
}

TEST(GammaSweep, ScopesAndCsv) {
    const auto f = fixture();
    const std::vector<double> gammas = {0.0, 0.6, 5.0};
    const auto rows = gamma_sweep(f.stream, f.labels, gammas);
    std::ostringstream pooled, mean, month;
    write_gamma_sweep(pooled, rows, "pooled");
    write_gamma_sweep(mean, rows, "month_mean");
    write_gamma_sweep(month, rows, "by_month");
    EXPECT_EQ(pooled.str(), "gamma,ppv,npv,n_pos,n_neg\n0,0.6666666666666666,0.5,3,2\n0.6,1,0,1,1\n5,NA,NA,0,0\n");
    EXPECT_EQ(month.str().substr(0, 6), "month,");
    EXPECT_NE(month.str().find("1969-12-05T00:00:00Z,0,"), std::string::npos);
    EXPECT_EQ(default_gamma_grid().size(), 11u);
}

TEST(Autocorrelation, WhiteNoiseStaysInsideBands) {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<double> x(20000);
    for (double& v : x) v = e(rng);
    const auto a = acf(x, 50);
    EXPECT_EQ(a[0], 1.0);
    const double band = 2.0 / std::sqrt(20000.0);
    int inside = 0;
    for (int k = 1; k <= 50; ++k) inside += std::abs(a[k]) <= band;
    EXPECT_GE(inside, 45);
}

TEST(Autocorrelation, Ar1ClosedForm) {
    for (double phi : {0.6, -0.4}) {
        const auto x = ar1(31, 100000, phi);
        const auto a = acf(x, 5);
        const auto p = pacf(x, 5);
        for (int k = 1; k <= 5; ++k) EXPECT_NEAR(a[k], std::pow(phi, k), 0.02) << phi << " lag " << k;
        EXPECT_NEAR(p[1], phi, 0.02);
        for (int k = 2; k <= 5; ++k) EXPECT_NEAR(p[k], 0.0, 0.02);
    }
}

TEST(Autocorrelation, DurbinLevinsonMatchesAr2Theory) {
    // AR(2) with phi1 = 0.5, phi2 = 0.3: rho1 = phi1 / (1 - phi2), pacf(2) = phi2.
    const double r1 = 0.5 / 0.7;
    const double r2 = 0.5 * r1 + 0.3;
    const double r3 = 0.5 * r2 + 0.3 * r1;
    const std::vector<double> rho = {1.0, r1, r2, r3};
    const auto p = pacf_from_acf(rho);
    EXPECT_NEAR(p[1], r1, 1e-14);
    EXPECT_NEAR(p[2], 0.3, 1e-14);
    EXPECT_NEAR(p[3], 0.0, 1e-14);
}

TEST(Autocorrelation, DegenerateInputs) {
    const std::vector<double> flat(100, 2.0);
    EXPECT_THROW(acf(flat, 5), DomainError);
    const std::vector<double> tiny = {1, 2, 3};
    EXPECT_THROW(acf(tiny, 5), ValidationError);
}

TEST(Volatility, RollingPopulationStd) {
    ReturnSeries r;
    for (int i = 0; i < 6; ++i) {
        r.timestamps.push_back(from_unix(3600 * (i + 1)));
        r.values.push_back(i % 2 == 0 ? 0.01 : -0.01);
    }
    const auto v = rolling_volatility(r, 4);
    ASSERT_EQ(v.values.size(), 3u);
    EXPECT_EQ(v.timestamps.front(), r.timestamps[3]);
    for (double s : v.values) EXPECT_NEAR(s, 0.01, 1e-15);
    EXPECT_THROW(rolling_volatility(r, 10), ValidationError);
}

TEST(Ranks, SpearmanWithTies) {
    const std::vector<double> a = {1, 2, 3, 4, 5};
    const std::vector<double> b = {5, 6, 7, 8, 70};
    EXPECT_NEAR(*spearman_correlation(a, b), 1.0, 1e-15);
    const std::vector<double> c = {1, 1, 2, 2, 3};
    // ranks 1.5 1.5 3.5 3.5 5 against 1..5
    EXPECT_NEAR(*spearman_correlation(a, c), 0.9486832980505138, 1e-12);
    const std::vector<double> d(5, 1.0);
    EXPECT_FALSE(spearman_correlation(a, d));
}

TEST(Activity, CountsTradesPerMonth) {
    const auto replay = oracle::forced_replay(oracle::example_ledger_trades());
    const auto result = run_backtest(replay.stream, replay.prices, {});
    const auto returns = compute_response(replay.prices);
    const auto vol = rolling_volatility(returns, 24);
    // The replay covers less than one anchored month.
    EXPECT_THROW(activity_report(result, vol, ActivityPeriod::month), ValidationError);
    const auto weekly = activity_report(result, vol, ActivityPeriod::week);
    EXPECT_GE(weekly.rows.size(), 2u);
    std::size_t total = 0;
    for (const auto& r : weekly.rows) total += r.trades;
    EXPECT_EQ(total, 12u);
    EXPECT_THROW(activity_period_from_string("day"), ConfigError);
}
