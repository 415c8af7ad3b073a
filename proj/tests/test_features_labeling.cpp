#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cwf/error.hpp"
#include "cwf/features.hpp"
#include "cwf/indicators.hpp"
#include "cwf/labeling.hpp"
#include "oracles.hpp"

using namespace cwf;

namespace {

CandleSeries sample_series(std::size_t n, std::uint64_t seed = 5) {
    std::mt19937_64 rng(seed);
    const auto closes = oracle::random_walk(rng, n, 5000.0, 0.01);
    return oracle::candles_from_closes(closes, from_unix(1514937600));
}

}  // namespace

TEST(FeatureSpec, ParseAndPrintRoundTrip) {
    for (const std::string text : {"pct_b", "bandwidth", "macd", "macd_signal", "macd_hist", "rsi_first",
                                   "rsi_smoothed", "ret:6", "sma:50", "ema:9", "volume_z", "extra:funding", "extras"}) {
        EXPECT_EQ(FeatureSpec::parse(text).to_string(), text);
    }
    EXPECT_THROW(FeatureSpec::parse("ret:0"), ConfigError);
    EXPECT_THROW(FeatureSpec::parse("wobble"), ConfigError);
}

TEST(Features, DefaultSelectionShapeAndWarmup) {
    const auto s = sample_series(300);
    const auto fm = build_feature_matrix(s, {}, default_feature_selection());
    EXPECT_EQ(fm.width(), kDefaultFeatureCount);
    EXPECT_EQ(fm.feature_names.front(), "pct_b");
    EXPECT_EQ(fm.feature_names.back(), "volume_z");
    // ret_24 needs 24 prior bars; everything else is ready earlier.
    EXPECT_EQ(fm.warmup_dropped, 24u);
    EXPECT_EQ(fm.size(), 300u - 24u);
    EXPECT_EQ(fm.timestamps.front(), s.candles[24].timestamp);
}

TEST(Features, ColumnsMatchIndicators) {
    const auto s = sample_series(200);
    const auto closes = s.closes();
    const std::vector<FeatureSpec> sel = {FeatureSpec::parse("pct_b"), FeatureSpec::parse("ret:3"),
                                          FeatureSpec::parse("rsi_smoothed")};
    const auto fm = build_feature_matrix(s, {}, sel);
    const auto b = bollinger(closes, 20);
    const auto r = rsi(closes, 14);
    for (std::size_t i = 0; i < fm.size(); ++i) {
        const std::size_t t = i + fm.warmup_dropped;
        EXPECT_EQ(fm.rows(i, 0), b.percent_b[t]);
        EXPECT_EQ(fm.rows(i, 1), response_between(closes[t - 3], closes[t], ResponseMode::paper));
        EXPECT_EQ(fm.rows(i, 2), r.smoothed[t]);
    }
}

TEST(Features, ExtraColumnsAndErrors) {
    auto s = sample_series(100);
    ExtraColumn x{"funding", {}};
    for (std::size_t i = 0; i < s.size(); ++i) x.values.push_back(i < 30 ? std::nullopt : std::optional(0.1 * i));
    s.extra_columns.push_back(x);
    const std::vector<FeatureSpec> sel = {FeatureSpec::parse("macd"), FeatureSpec::parse("extra:funding")};
    const auto fm = build_feature_matrix(s, {}, sel);
    EXPECT_EQ(fm.warmup_dropped, 30u);
    EXPECT_EQ(fm.rows(0, 1), 3.0);

    s.extra_columns[0].values[50] = std::nullopt;
    EXPECT_THROW(build_feature_matrix(s, {}, sel), ValidationError);
    const std::vector<FeatureSpec> dup = {FeatureSpec::parse("macd"), FeatureSpec::parse("macd")};
    EXPECT_THROW(build_feature_matrix(s, {}, dup), ConfigError);
    const std::vector<FeatureSpec> missing = {FeatureSpec::parse("extra:nope")};
    EXPECT_THROW(build_feature_matrix(s, {}, missing), ConfigError);
    EXPECT_THROW(build_feature_matrix(sample_series(20), {}, default_feature_selection()), ValidationError);
}

TEST(Features, BadIndicatorConfig) {
    IndicatorConfig c;
    c.macd_fast = 30;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.rsi_window = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Features, CsvRoundTrip) {
    const auto fm = build_feature_matrix(sample_series(120), {}, default_feature_selection());
    std::stringstream buf;
    write_feature_matrix(buf, fm);
    const auto back = read_feature_matrix(buf);
    EXPECT_EQ(back.timestamps, fm.timestamps);
    EXPECT_EQ(back.feature_names, fm.feature_names);
    EXPECT_EQ(back.rows, fm.rows);
}

TEST(Labels, ThresholdBoundaries) {
    EXPECT_EQ(assign_class(0.005), ClassLabel::up);
    EXPECT_EQ(assign_class(-0.005), ClassLabel::down);
    EXPECT_EQ(assign_class(0.0049), ClassLabel::same);
    EXPECT_EQ(assign_class(-0.0049), ClassLabel::same);
    EXPECT_EQ(assign_class(0.0), ClassLabel::same);
    EXPECT_THROW(assign_class(std::nan("")), DomainError);
    EXPECT_THROW(assign_class(0.1, 0.0), DomainError);
    EXPECT_EQ(to_string(ClassLabel::up), "c1");
    EXPECT_EQ(class_label_from_string("c3"), ClassLabel::same);
    EXPECT_EQ(class_label_from_string("down"), ClassLabel::down);
}

TEST(Labels, ExampleLedgerFirstTradeIsSameClass) {
    // 8499.90 -> 8815.08 is a 3.7% move but only 0.40% in the log-ratio response.
    EXPECT_EQ(assign_class(response_between(8499.90, 8815.08, ResponseMode::paper)), ClassLabel::same);
    EXPECT_EQ(assign_class(response_between(8499.90, 8815.08, ResponseMode::plain_log)), ClassLabel::up);
}

TEST(Labels, ClassWeights) {
    const auto w = class_weights({900, 50, 50});
    EXPECT_NEAR(w[0], 1000.0 / 2700.0, 1e-15);
    EXPECT_NEAR(w[1], 1000.0 / 150.0, 1e-13);
    EXPECT_NEAR(w[2], 1000.0 / 150.0, 1e-13);
    const auto even = class_weights({10, 10, 10});
    for (double v : even) EXPECT_DOUBLE_EQ(v, 1.0);
    EXPECT_THROW(class_weights({10, 0, 5}), ValidationError);
}

TEST(Labels, DatasetPairsFeaturesWithNextHourResponse) {
    const auto s = sample_series(150);
    const auto fm = build_feature_matrix(s, {}, default_feature_selection());
    const auto r = compute_response(s);
    const auto ds = build_labeled_dataset(fm, r);
    ASSERT_EQ(ds.size(), fm.size() - 1);  // the final bar has no realised response yet
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::size_t t = i + fm.warmup_dropped;
        const double expected = response_between(s.candles[t].close, s.candles[t + 1].close, ResponseMode::paper);
        EXPECT_EQ(ds.responses[i], expected);
        EXPECT_EQ(ds.labels[i], assign_class(expected));
        EXPECT_EQ(ds.timestamps[i], fm.timestamps[i]);
    }
    const auto counts = count_classes(ds.labels);
    EXPECT_EQ(counts, ds.class_counts);
    EXPECT_EQ(counts[0] + counts[1] + counts[2], ds.size());
    const auto part = ds.slice(10, 20);
    EXPECT_EQ(part.size(), 10u);
    EXPECT_EQ(part.timestamps[0], ds.timestamps[10]);
}

TEST(Labels, MisalignedResponsesAreRejected) {
    const auto s = sample_series(150);
    const auto fm = build_feature_matrix(s, {}, default_feature_selection());
    auto r = compute_response(s);
    r.timestamps.erase(r.timestamps.begin() + 60);
    r.values.erase(r.values.begin() + 60);
    EXPECT_THROW(build_labeled_dataset(fm, r), ValidationError);
}

TEST(Labels, RollingProportions) {
    std::vector<Timestamp> ts;
    std::vector<ClassLabel> labels;
    for (int i = 0; i < 6; ++i) {
        ts.push_back(from_unix(3600 * i));
        labels.push_back(i % 3 == 0 ? ClassLabel::up : ClassLabel::same);
    }
    const auto p = rolling_class_proportions(ts, labels, 3);
    ASSERT_EQ(p.timestamps.size(), 4u);
    EXPECT_NEAR(p.proportions[0][0], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(p.proportions[0][2], 2.0 / 3.0, 1e-15);
    for (const auto& row : p.proportions) EXPECT_NEAR(row[0] + row[1] + row[2], 1.0, 1e-15);
}

TEST(Labels, CalendarProportions) {
    std::vector<Timestamp> ts;
    std::vector<ClassLabel> labels;
    const auto start = *parse_iso8601("2018-01-01");
    for (int d = 0; d < 120; ++d) {
        ts.push_back(start + std::chrono::days{d});
        labels.push_back(d < 60 ? ClassLabel::down : ClassLabel::up);
    }
    const auto p = rolling_class_proportions_calendar(ts, labels, 1);
    ASSERT_FALSE(p.timestamps.empty());
    EXPECT_GE(p.timestamps.front(), add_months(start, 1));
    EXPECT_EQ(p.proportions.back()[0], 1.0);
}
