#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cwf/market_data.hpp"
#include "cwf/walkforward.hpp"

namespace cwf {

struct StrategyConfig {
    double gamma = 0.0;
    double take_profit = 0.10;  // gain threshold, fraction of entry value
    double stop_loss = 0.05;    // loss magnitude as a fraction of entry value
    double fee = 0.0025;        // per side, on traded notional
    double initial_cash = 100.0;

    void validate() const;
};

// All-in portfolio: either all cash or all coins.
struct PortfolioState {
    double cash = 0.0;
    double coins = 0.0;
    double entry_value = 0.0;  // value at the most recent trade

    bool in_position() const noexcept { return coins > 0.0; }
    double value_at(double price) const noexcept { return cash + coins * price; }
};

PortfolioState initial_state(const StrategyConfig& config);

// coins = cash (1 - fee) / price, entry = cash, cash = 0. LogicError if already in position.
PortfolioState execute_buy(const PortfolioState& state, double price, double fee);
// cash = coins * price (1 - fee), coins = 0, entry = cash. LogicError if holding no coins.
PortfolioState execute_sell(const PortfolioState& state, double price, double fee);

enum class ExitDecision { hold, take_profit, stop_loss };

// Gain g = (coins * price - entry) / entry; take-profit iff g >= take_profit, stop-loss iff g <= -stop_loss.
ExitDecision check_exit(const PortfolioState& state, double price, double take_profit, double stop_loss);

enum class TradeSide { buy, sell };
enum class TradeTrigger { signal, take_profit, stop_loss };

std::string to_string(TradeSide side);
std::string to_string(TradeTrigger trigger);

struct TradeRecord {
    TradeSide side = TradeSide::buy;
    Timestamp timestamp{};
    double unit_price = 0.0;
    double quantity = 0.0;  // coins traded
    double fee = 0.0;       // quote currency
    TradeTrigger trigger = TradeTrigger::signal;
};

struct BacktestResult {
    StrategyConfig config;
    std::vector<TradeRecord> trades;
    std::vector<Timestamp> timestamps;  // one per bar of the run
    std::vector<double> equity;         // portfolio value marked at close
    std::vector<double> closes;
    std::vector<bool> in_position;      // state after the bar
    PortfolioState final_state;

    std::size_t bars() const noexcept { return timestamps.size(); }
    // Buy-and-hold value of 100 quote units bought at the first close.
    std::vector<double> market_value_of_100() const;
    double total_return() const;
};

// Runs the long-only strategy bar by bar over the stream. Actionability is
// re-derived from each prediction's scores at config.gamma. Per bar: buy on an
// actionable c1 while in cash; otherwise sell on an actionable c2 while in
// position; then, if still in position, sell on take-profit or stop-loss.
// Fills happen at the bar's close. An open position at the end is marked, not sold.
BacktestResult run_backtest(const PredictionStream& stream, const CandleSeries& prices,
                            const StrategyConfig& config);

struct MonthRow {
    Timestamp start{};
    Timestamp end{};
    double strategy_return = 0.0;
    double market_return = 0.0;
    std::size_t trades = 0;
    bool partial = false;  // the run does not cover the whole month
};

struct MonthlySummary {
    std::vector<MonthRow> months;
    double compounded_return = 0.0;
    double market_compounded_return = 0.0;
    double strategy_std = 0.0;  // population std of monthly returns
    double market_std = 0.0;
    std::optional<double> correlation;  // Pearson, monthly strategy vs market
    std::size_t total_trades = 0;
};

// Month m runs from its anchor day to the next. Each month's return is measured
// from the previous month's last mark (initial cash / first close for the first
// month), so monthly returns compound to the whole-run ratio.
MonthlySummary summarize(const BacktestResult& result, unsigned anchor_day = 5);

void write_trade_ledger(std::ostream& out, const std::vector<TradeRecord>& trades);
void write_equity_curve(std::ostream& out, const BacktestResult& result);
nlohmann::json summary_json(const MonthlySummary& summary, const BacktestResult& result);

// Pearson correlation; nullopt when either side has zero variance or fewer than 2 points.
std::optional<double> pearson_correlation(std::span<const double> a, std::span<const double> b);
double population_stddev(std::span<const double> values);

}  // namespace cwf
