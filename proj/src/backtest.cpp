#include "cwf/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "cwf/error.hpp"
#include "cwf/format.hpp"

namespace cwf {

void StrategyConfig::validate() const {
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
    if (!(take_profit > 0.0)) throw ConfigError("take_profit must be > 0");
    if (!(stop_loss > 0.0)) throw ConfigError("stop_loss must be > 0");
    if (!(fee >= 0.0 && fee <= 0.01)) throw ConfigError("fee must be in [0, 0.01]");
    if (!(initial_cash > 0.0)) throw ConfigError("initial_cash must be > 0");
}

PortfolioState initial_state(const StrategyConfig& config) {
    return PortfolioState{config.initial_cash, 0.0, config.initial_cash};
}

PortfolioState execute_buy(const PortfolioState& state, double price, double fee) {
    if (state.in_position() || !(state.cash > 0.0)) {
        throw LogicError("buy requires a cash-only portfolio");
    }
    if (!(price > 0.0)) {
        throw DomainError("buy price must be positive");
    }
    PortfolioState next;
    next.coins = state.cash * (1.0 - fee) / price;
    next.entry_value = state.cash;
    next.cash = 0.0;
    return next;
}

PortfolioState execute_sell(const PortfolioState& state, double price, double fee) {
    if (!state.in_position()) {
        throw LogicError("sell requires holding coins");
    }
    if (!(price > 0.0)) {
        throw DomainError("sell price must be positive");
    }
    PortfolioState next;
    next.cash = state.coins * price * (1.0 - fee);
    next.coins = 0.0;
    next.entry_value = next.cash;
    return next;
}

ExitDecision check_exit(const PortfolioState& state, double price, double take_profit, double stop_loss) {
    if (!state.in_position() || !(state.entry_value > 0.0)) {
        return ExitDecision::hold;
    }
    const double gain = (state.coins * price - state.entry_value) / state.entry_value;
    if (gain >= take_profit) {
        return ExitDecision::take_profit;
    }
    if (gain <= -stop_loss) {
        return ExitDecision::stop_loss;
    }
    return ExitDecision::hold;
}

std::string to_string(TradeSide side) { return side == TradeSide::buy ? "buy" : "sell"; }

std::string to_string(TradeTrigger trigger) {
    switch (trigger) {
        case TradeTrigger::signal: return "signal";
        case TradeTrigger::take_profit: return "take_profit";
        case TradeTrigger::stop_loss: return "stop_loss";
    }
    return "?";
}

std::vector<double> BacktestResult::market_value_of_100() const {
    std::vector<double> out;
    out.reserve(closes.size());
    for (double c : closes) {
        out.push_back(100.0 * c / closes.front());
    }
    return out;
}

double BacktestResult::total_return() const {
    return equity.empty() ? 0.0 : equity.back() / config.initial_cash - 1.0;
}

BacktestResult run_backtest(const PredictionStream& stream, const CandleSeries& prices,
                            const StrategyConfig& config) {
    config.validate();
    std::unordered_map<std::int64_t, std::size_t> bar_of;
    bar_of.reserve(prices.size());
    for (std::size_t i = 0; i < prices.size(); ++i) {
        bar_of.emplace(to_unix(prices.candles[i].timestamp), i);
    }

    BacktestResult result;
    result.config = config;
    PortfolioState state = initial_state(config);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const Prediction& p = stream.predictions[i];
        if (i > 0 && p.timestamp <= stream.predictions[i - 1].timestamp) {
            throw ValidationError("prediction stream is not strictly increasing at " + format_iso8601(p.timestamp));
        }
        const auto it = bar_of.find(to_unix(p.timestamp));
        if (it == bar_of.end()) {
            throw ValidationError("no price bar at prediction time " + format_iso8601(p.timestamp));
        }
        const double price = prices.candles[it->second].close;
        if (!(price > 0.0)) {
            throw DomainError("non-positive price at " + format_iso8601(p.timestamp));
        }

        bool buy_signal = false;
        bool sell_signal = false;
        if (p.has_model) {
            const Prediction gated = predict_with_gamma(p.scores, config.gamma, p.timestamp);
            buy_signal = gated.actionable && gated.argmax == ClassLabel::up;
            sell_signal = gated.actionable && gated.argmax == ClassLabel::down;
        }

        auto record = [&](TradeSide side, TradeTrigger trigger, const PortfolioState& before) {
            TradeRecord t;
            t.side = side;
            t.timestamp = p.timestamp;
            t.unit_price = price;
            t.trigger = trigger;
            if (side == TradeSide::buy) {
                t.quantity = state.coins;
                t.fee = before.cash * config.fee;
            } else {
                t.quantity = before.coins;
                t.fee = before.coins * price * config.fee;
            }
            result.trades.push_back(t);
        };

        if (!state.in_position()) {
            if (buy_signal) {
                const PortfolioState before = state;
                state = execute_buy(state, price, config.fee);
                record(TradeSide::buy, TradeTrigger::signal, before);
            }
        } else {
            if (sell_signal) {
                const PortfolioState before = state;
                state = execute_sell(state, price, config.fee);
                record(TradeSide::sell, TradeTrigger::signal, before);
            }
            if (state.in_position()) {
                const ExitDecision exit = check_exit(state, price, config.take_profit, config.stop_loss);
                if (exit != ExitDecision::hold) {
                    const PortfolioState before = state;
                    state = execute_sell(state, price, config.fee);
                    record(TradeSide::sell,
                           exit == ExitDecision::take_profit ? TradeTrigger::take_profit : TradeTrigger::stop_loss,
                           before);
                }
            }
        }
        result.timestamps.push_back(p.timestamp);
        result.closes.push_back(price);
        result.equity.push_back(state.value_at(price));
        result.in_position.push_back(state.in_position());
    }
    result.final_state = state;
    return result;
}

double population_stddev(std::span<const double> values) {
    if (values.empty()) {
        return 0.0;
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double m2 = 0.0;
    for (double v : values) {
        m2 += (v - mean) * (v - mean);
    }
    return std::sqrt(m2 / static_cast<double>(values.size()));
}

std::optional<double> pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("correlation inputs differ in length");
    }
    if (a.size() < 2) {
        return std::nullopt;
    }
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) {
        return std::nullopt;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

MonthlySummary summarize(const BacktestResult& result, unsigned anchor_day) {
    if (result.bars() == 0) {
        throw ValidationError("backtest has no bars to summarize");
    }
    const Timestamp first = result.timestamps.front();
    const Timestamp run_end = result.timestamps.back() + kHour;
    if (add_months(first, 1) > run_end) {
        throw ValidationError("backtest spans less than one reporting month");
    }

    MonthlySummary summary;
    double prev_equity = result.config.initial_cash;
    double prev_close = result.closes.front();
    std::size_t bar = 0;
    std::size_t trade = 0;
    for (Timestamp start = anchored_month_start(first, anchor_day); start < run_end; start = add_months(start, 1)) {
        const Timestamp end = add_months(start, 1);
        MonthRow row;
        row.start = start;
        row.end = end;
        row.partial = start < first || end > run_end;
        std::size_t last_bar = bar;
        bool any = false;
        while (bar < result.bars() && result.timestamps[bar] < end) {
            last_bar = bar++;
            any = true;
        }
        while (trade < result.trades.size() && result.trades[trade].timestamp < end) {
            ++row.trades;
            ++trade;
        }
        if (any) {
            row.strategy_return = result.equity[last_bar] / prev_equity - 1.0;
            row.market_return = result.closes[last_bar] / prev_close - 1.0;
            prev_equity = result.equity[last_bar];
            prev_close = result.closes[last_bar];
        }
        summary.total_trades += row.trades;
        summary.months.push_back(row);
    }

    std::vector<double> strat, market;
    double growth = 1.0, market_growth = 1.0;
    for (const auto& m : summary.months) {
        strat.push_back(m.strategy_return);
        market.push_back(m.market_return);
        growth *= 1.0 + m.strategy_return;
        market_growth *= 1.0 + m.market_return;
    }
    summary.compounded_return = growth - 1.0;
    summary.market_compounded_return = market_growth - 1.0;
    summary.strategy_std = population_stddev(strat);
    summary.market_std = population_stddev(market);
    summary.correlation = pearson_correlation(strat, market);
    return summary;
}

void write_trade_ledger(std::ostream& out, const std::vector<TradeRecord>& trades) {
    out << "side,timestamp,unit_price,quantity,fee,trigger\n";
    for (const auto& t : trades) {
        out << to_string(t.side) << ',' << format_iso8601(t.timestamp) << ',' << format_double(t.unit_price) << ','
            << format_double(t.quantity) << ',' << format_double(t.fee) << ',' << to_string(t.trigger) << '\n';
    }
}

void write_equity_curve(std::ostream& out, const BacktestResult& result) {
    out << "timestamp,portfolio_value,market_value_of_100\n";
    const auto market = result.market_value_of_100();
    for (std::size_t i = 0; i < result.bars(); ++i) {
        out << format_iso8601(result.timestamps[i]) << ',' << format_double(result.equity[i]) << ','
            << format_double(market[i]) << '\n';
    }
}

nlohmann::json summary_json(const MonthlySummary& summary, const BacktestResult& result) {
    using nlohmann::json;
    json months = json::array();
    for (const auto& m : summary.months) {
        months.push_back({{"month_start", format_iso8601(m.start)},
                          {"month_end", format_iso8601(m.end)},
                          {"strategy_return", m.strategy_return},
                          {"market_return", m.market_return},
                          {"trades", m.trades},
                          {"partial", m.partial}});
    }
    const auto& c = result.config;
    return {
        {"config",
         {{"gamma", c.gamma},
          {"take_profit", c.take_profit},
          {"stop_loss", c.stop_loss},
          {"fee", c.fee},
          {"initial_cash", c.initial_cash}}},
        {"months", months},
        {"totals",
         {{"compounded_return", summary.compounded_return},
          {"market_compounded_return", summary.market_compounded_return},
          {"strategy_return_std", summary.strategy_std},
          {"market_return_std", summary.market_std},
          {"correlation", summary.correlation ? json(*summary.correlation) : json(nullptr)},
          {"trades", summary.total_trades},
          {"final_value", result.equity.empty() ? c.initial_cash : result.equity.back()},
          {"ends_in_position", result.final_state.in_position()},
          {"note", summary.total_trades == 0 ? "0 trades" : ""}}},
    };
}

}  // namespace cwf
