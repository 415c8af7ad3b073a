#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cwf/backtest.hpp"
#include "cwf/error.hpp"
#include "oracles.hpp"

using namespace cwf;

namespace {

double round_trip_product(const std::vector<oracle::ForcedTrade>& trades) {
    long double g = 1;
    for (std::size_t i = 0; i + 1 < trades.size(); i += 2) g *= (long double)trades[i + 1].price / trades[i].price;
    return static_cast<double>(g);
}

}  // namespace

TEST(Accounting, BuyAndSellFormulas) {
    StrategyConfig c;
    auto s = initial_state(c);
    EXPECT_EQ(s.cash, 100.0);
    s = execute_buy(s, 50.0, 0.0025);
    EXPECT_DOUBLE_EQ(s.coins, 100.0 * 0.9975 / 50.0);
    EXPECT_EQ(s.cash, 0.0);
    EXPECT_EQ(s.entry_value, 100.0);
    EXPECT_THROW(execute_buy(s, 50.0, 0.0025), LogicError);
    s = execute_sell(s, 60.0, 0.0025);
    EXPECT_DOUBLE_EQ(s.cash, 100.0 * 0.9975 * 1.2 * 0.9975);
    EXPECT_EQ(s.entry_value, s.cash);
    EXPECT_THROW(execute_sell(s, 60.0, 0.0025), LogicError);
}

TEST(Accounting, ExitThresholds) {
    PortfolioState s;
    s.coins = 1.0;
    s.entry_value = 100.0;
    EXPECT_EQ(check_exit(s, 110.0, 0.10, 0.05), ExitDecision::take_profit);
    EXPECT_EQ(check_exit(s, 109.9, 0.10, 0.05), ExitDecision::hold);
    EXPECT_EQ(check_exit(s, 95.0, 0.10, 0.05), ExitDecision::stop_loss);
    EXPECT_EQ(check_exit(s, 95.1, 0.10, 0.05), ExitDecision::hold);
    PortfolioState flat;
    flat.cash = 100;
    EXPECT_EQ(check_exit(flat, 1.0, 0.10, 0.05), ExitDecision::hold);
}

TEST(Backtest, ExampleLedgerReplay) {
    const auto trades = oracle::example_ledger_trades();
    const auto replay = oracle::forced_replay(trades);
    StrategyConfig gross;
    gross.fee = 0.0;
    const auto g = run_backtest(replay.stream, replay.prices, gross);
    ASSERT_EQ(g.trades.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(g.trades[i].unit_price, trades[i].price);
        EXPECT_EQ(g.trades[i].timestamp, *parse_iso8601(trades[i].timestamp));
        EXPECT_EQ(g.trades[i].trigger, TradeTrigger::signal);
    }
    const double oracle_gross = round_trip_product(trades);
    EXPECT_NEAR(g.final_state.cash / 100.0, oracle_gross, 1e-12);
    EXPECT_NEAR(oracle_gross, 1.2682, 5e-4);

    const auto n = run_backtest(replay.stream, replay.prices, StrategyConfig{});
    const double net = n.final_state.cash / 100.0;
    EXPECT_NEAR(net, oracle_gross * std::pow(0.9975, 12), 1e-12);
    EXPECT_GE(net, 1.225);
    EXPECT_LE(net, 1.235);
    EXPECT_EQ(oracle::check_accounting(n, 1e-12), "");
}

TEST(Backtest, TakeProfitAndStopLossTriggers) {
    const std::vector<double> closes = {100, 100, 105, 111, 111, 100, 94, 94};
    const auto prices = oracle::candles_from_closes(closes, from_unix(0));
    PredictionStream s;
    for (std::size_t i = 0; i < closes.size(); ++i) {
        const bool buy = i == 0 || i == 4;
        s.predictions.push_back(predict_with_gamma(buy ? Scores{1, -1, -1} : Scores{-1, -1, 1}, 0.0,
                                                   prices.candles[i].timestamp));
    }
    StrategyConfig c;
    c.fee = 0.0;
    c.take_profit = 0.10;  // 105 is +5%, 111 is +11%
    c.stop_loss = 0.12;    // 100 is -9.9%, 94 is -15.3%
    const auto r = run_backtest(s, prices, c);
    ASSERT_EQ(r.trades.size(), 4u);
    EXPECT_EQ(r.trades[1].trigger, TradeTrigger::take_profit);
    EXPECT_EQ(r.trades[1].unit_price, 111.0);
    EXPECT_EQ(r.trades[3].trigger, TradeTrigger::stop_loss);
    EXPECT_EQ(r.trades[3].unit_price, 94.0);
}

TEST(Backtest, GammaGatesSignalsAndModellessBarsAreIgnored) {
    const std::vector<double> closes = {100, 101, 102, 103};
    const auto prices = oracle::candles_from_closes(closes, from_unix(0));
    PredictionStream s;
    s.predictions.push_back(predict_with_gamma({0.3, -1, -1}, 0.0, prices.candles[0].timestamp));
    Prediction none;
    none.timestamp = prices.candles[1].timestamp;
    none.scores = {5, -1, -1};
    none.has_model = false;
    s.predictions.push_back(none);
    StrategyConfig c;
    c.gamma = 0.5;
    EXPECT_TRUE(run_backtest(s, prices, c).trades.empty());
    c.gamma = 0.2;
    const auto r = run_backtest(s, prices, c);
    ASSERT_EQ(r.trades.size(), 1u);
    EXPECT_TRUE(r.final_state.in_position());  // open at the end: marked, not sold
    EXPECT_DOUBLE_EQ(r.equity.back(), r.final_state.coins * 101.0);
}

TEST(Backtest, RandomFixturesSatisfyAccountingIdentities) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto closes = oracle::random_walk(rng, 300, 100.0, 0.03);
        const auto prices = oracle::candles_from_closes(closes, from_unix(0));
        std::vector<Timestamp> ts;
        for (const auto& c : prices.candles) ts.push_back(c.timestamp);
        const auto stream = oracle::random_stream(rng, ts);
        StrategyConfig c;
        c.fee = 0.01 * u(rng);
        c.take_profit = 0.02 + 0.2 * u(rng);
        c.stop_loss = 0.02 + 0.2 * u(rng);
        c.gamma = u(rng);
        const auto r = run_backtest(stream, prices, c);
        EXPECT_EQ(oracle::check_accounting(r, 1e-10), "") << trial;
    }
}

TEST(Backtest, RejectsMisalignedStream) {
    const std::vector<double> closes = {100, 101};
    const auto prices = oracle::candles_from_closes(closes, from_unix(0));
    PredictionStream s;
    s.predictions.push_back(predict_with_gamma({1, -1, -1}, 0.0, from_unix(999 * 3600)));
    EXPECT_THROW(run_backtest(s, prices, {}), ValidationError);
    StrategyConfig bad;
    bad.fee = 0.5;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Summary, MonthlyReturnsCompound) {
    std::mt19937_64 rng(19);
    const auto closes = oracle::random_walk(rng, 24 * 95, 1000.0, 0.01);
    const auto prices = oracle::candles_from_closes(closes, *parse_iso8601("2018-01-05"));
    std::vector<Timestamp> ts;
    for (const auto& c : prices.candles) ts.push_back(c.timestamp);
    const auto r = run_backtest(oracle::random_stream(rng, ts), prices, {});
    const auto m = summarize(r);
    ASSERT_GE(m.months.size(), 3u);
    EXPECT_EQ(m.months[0].start, *parse_iso8601("2018-01-05"));
    long double s = 1, k = 1;
    std::size_t trades = 0;
    for (const auto& row : m.months) {
        s *= 1 + row.strategy_return;
        k *= 1 + row.market_return;
        trades += row.trades;
    }
    EXPECT_NEAR(static_cast<double>(s), r.equity.back() / 100.0, 1e-12);
    EXPECT_NEAR(static_cast<double>(k), closes.back() / closes.front(), 1e-12);
    EXPECT_NEAR(m.compounded_return, r.total_return(), 1e-12);
    EXPECT_EQ(trades, r.trades.size());
    EXPECT_EQ(m.total_trades, r.trades.size());
    EXPECT_TRUE(m.months.back().partial);
}

TEST(Summary, NoTradesIsFlat) {
    const std::vector<double> closes(24 * 40, 50.0);
    const auto prices = oracle::candles_from_closes(closes, *parse_iso8601("2018-01-05"));
    PredictionStream s;
    for (const auto& c : prices.candles) s.predictions.push_back(predict_with_gamma({1, -1, -1}, 0, c.timestamp));
    StrategyConfig c;
    c.gamma = 100.0;
    const auto r = run_backtest(s, prices, c);
    for (double e : r.equity) EXPECT_EQ(e, 100.0);
    const auto j = summary_json(summarize(r), r);
    EXPECT_EQ(j.at("totals").at("trades"), 0);
    EXPECT_NE(j.dump().find("0 trades"), std::string::npos);
}

TEST(Summary, Exports) {
    const auto replay = oracle::forced_replay(oracle::example_ledger_trades());
    const auto r = run_backtest(replay.stream, replay.prices, {});
    std::ostringstream ledger, equity;
    write_trade_ledger(ledger, r.trades);
    write_equity_curve(equity, r);
    EXPECT_EQ(ledger.str().substr(0, ledger.str().find('\n')), "side,timestamp,unit_price,quantity,fee,trigger");
    EXPECT_NE(ledger.str().find("buy,2018-03-09T05:00:00Z,8499.9,"), std::string::npos);
    EXPECT_EQ(equity.str().substr(0, equity.str().find('\n')), "timestamp,portfolio_value,market_value_of_100");
}

TEST(Stats, PearsonAndStd) {
    const std::vector<double> a = {1, 2, 3, 4};
    const std::vector<double> b = {2, 4, 6, 8};
    const std::vector<double> c = {5, 5, 5, 5};
    EXPECT_NEAR(*pearson_correlation(a, b), 1.0, 1e-15);
    EXPECT_FALSE(pearson_correlation(a, c));
    EXPECT_NEAR(population_stddev(a), std::sqrt(1.25), 1e-15);
}
