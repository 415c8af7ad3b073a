#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "cwf/error.hpp"
#include "cwf/market_data.hpp"
#include "oracles.hpp"

using namespace cwf;

namespace {

CandleSeries parse(const std::string& text) {
    std::istringstream in(text);
    return parse_candles(in, {"BTCUSD"});
}

}  // namespace

TEST(CandleParsing, UnixAndIsoDetectedPerFile) {
    const auto a = parse("timestamp,open,high,low,close,volume\n1520571600,1,2,0.5,1.5,10\n");
    const auto b = parse("timestamp,open,high,low,close,volume\n2018-03-09T05:00:00Z,1,2,0.5,1.5,10\n");
    EXPECT_EQ(a.candles, b.candles);
    EXPECT_THROW(parse("timestamp,open,high,low,close,volume\n1520571600,1,2,0.5,1.5,10\n"
                       "2018-03-09T06:00:00Z,1,2,0.5,1.5,10\n"),
                 ParseError);
}

TEST(CandleParsing, SortsRows) {
    const auto s = parse("timestamp,open,high,low,close,volume\n7200,1,1,1,1,0\n3600,2,2,2,2,0\n");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(to_unix(s.candles[0].timestamp), 3600);
    EXPECT_EQ(s.symbol, "BTCUSD");
}

TEST(CandleParsing, ErrorsNameTheLine) {
    try {
        parse("timestamp,open,high,low,close,volume\n3600,1,1,1,1,0\n7200,1,1,-1,1,0\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    EXPECT_THROW(parse("timestamp,open,high,low,close,volume\n3600,1,1,1,1,0\n3600,1,1,1,1,0\n"), ParseError);
    EXPECT_THROW(parse("timestamp,open,high,low,close,volume\n3600,1,1,1,1\n"), ParseError);
    EXPECT_THROW(parse("time,open,high,low,close,volume\n"), ParseError);
    EXPECT_THROW(parse("timestamp,open,high,low,close,volume\n3600,1;5,1,1,1,0\n"), ParseError);
    EXPECT_THROW(parse("timestamp,open,high,low,close,volume\n3600,0,1,1,1,0\n"), ParseError);
}

TEST(CandleParsing, ExtraColumnsAllowMissing) {
    const auto s = parse("timestamp,open,high,low,close,volume,funding\n3600,1,1,1,1,0,0.5\n7200,1,1,1,1,0,\n");
    ASSERT_EQ(s.extra_columns.size(), 1u);
    EXPECT_EQ(s.extra_columns[0].name, "funding");
    EXPECT_EQ(s.extra_columns[0].values[0], 0.5);
    EXPECT_FALSE(s.extra_columns[0].values[1]);
}

TEST(CandleParsing, WriteParseRoundTripOnRandomSeries) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto closes = oracle::random_walk(rng, 50 + trial, 100.0 + trial, 0.02);
        auto series = oracle::candles_from_closes(closes, from_unix(1514937600));
        series.symbol = "BTCUSD";
        ExtraColumn extra{"x", {}};
        for (std::size_t i = 0; i < series.size(); ++i) {
            extra.values.push_back(i % 5 == 3 ? std::nullopt : std::optional<double>(std::sin(1.0 * i)));
        }
        series.extra_columns.push_back(extra);
        for (auto fmt : {TimestampFormat::unix_seconds, TimestampFormat::iso8601}) {
            std::stringstream buf;
            write_candles(buf, series, fmt);
            EXPECT_EQ(parse_candles(buf, {"BTCUSD"}), series);
        }
    }
}

TEST(Repair, GaplessSeriesIsUnchanged) {
    const std::vector<double> closes = {10, 11, 12, 11};
    const auto s = oracle::candles_from_closes(closes, from_unix(3600));
    const auto r = validate_and_repair(s);
    EXPECT_EQ(r.series, s);
    EXPECT_TRUE(r.report.empty());
}

TEST(Repair, SingleMissingHourIsForwardFilled) {
    auto s = parse("timestamp,open,high,low,close,volume,x\n3600,10,12,9,11,5,1\n10800,11,13,10,12,4,2\n");
    const auto r = validate_and_repair(s);
    ASSERT_EQ(r.series.size(), 3u);
    const Candle& filled = r.series.candles[1];
    EXPECT_EQ(to_unix(filled.timestamp), 7200);
    EXPECT_EQ(filled.open, 11);
    EXPECT_EQ(filled.high, 11);
    EXPECT_EQ(filled.low, 11);
    EXPECT_EQ(filled.close, 11);
    EXPECT_EQ(filled.volume, 0);
    EXPECT_EQ(r.series.extra_columns[0].values[1], 1.0);
    ASSERT_EQ(r.report.size(), 1u);
    EXPECT_EQ(r.report[0].action, "forward_fill");
    EXPECT_EQ(repair_report_json(r.report).dump(), R"([{"action":"forward_fill","timestamp":"1970-01-01T02:00:00Z"}])");
}

TEST(Repair, PolicyRejectsAndLongGaps) {
    auto s = parse("timestamp,open,high,low,close,volume\n3600,10,12,9,11,5\n10800,11,13,10,12,4\n");
    EXPECT_THROW(validate_and_repair(s, {GapAction::reject, 6}), ValidationError);
    auto far = parse("timestamp,open,high,low,close,volume\n3600,10,12,9,11,5\n36000,11,13,10,12,4\n");
    EXPECT_THROW(validate_and_repair(far, {GapAction::forward_fill, 6}), ValidationError);
}

TEST(Repair, RejectsInconsistentCandles) {
    auto bad = parse("timestamp,open,high,low,close,volume\n3600,10,9,8,11,5\n");
    EXPECT_THROW(validate_and_repair(bad), ValidationError);
    auto misaligned = parse("timestamp,open,high,low,close,volume\n3601,10,12,9,11,5\n");
    EXPECT_THROW(validate_and_repair(misaligned), ValidationError);
}

TEST(Response, LogScaledModeAgainstHighPrecision) {
    using boost::multiprecision::cpp_dec_float_50;
    const cpp_dec_float_50 a("8499.90");
    const cpp_dec_float_50 b("8815.08");
    const cpp_dec_float_50 expected = (log(b) - log(a)) / log(a);
    EXPECT_NEAR(response_between(8499.90, 8815.08, ResponseMode::paper), expected.convert_to<double>(), 1e-15);
    EXPECT_NEAR(response_between(8499.90, 8815.08, ResponseMode::plain_log), std::log(8815.08 / 8499.90), 1e-15);
}

TEST(Response, ConstantSeriesGivesZeros) {
    const std::vector<double> closes(5, 42.0);
    const auto r = compute_response(oracle::candles_from_closes(closes, from_unix(0)));
    ASSERT_EQ(r.size(), 4u);
    for (double v : r.values) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(to_unix(r.timestamps[0]), 3600);
}

TEST(Response, LogScaledModeNeedsPricesAboveOne) {
    EXPECT_THROW(response_between(1.0, 2.0, ResponseMode::paper), DomainError);
    EXPECT_THROW(response_between(0.5, 2.0, ResponseMode::paper), DomainError);
    EXPECT_NO_THROW(response_between(0.5, 2.0, ResponseMode::plain_log));
}
