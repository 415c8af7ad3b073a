#pragma once

// Straightforward reference implementations used as independent oracles.
// Everything is evaluated directly from the textbook formulas in long double,
// window by window, without the incremental tricks of the library code.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cwf/backtest.hpp"
#include "cwf/market_data.hpp"
#include "cwf/matrix.hpp"
#include "cwf/walkforward.hpp"

namespace oracle {

using Real = long double;

// NaN before the first full window.
std::vector<double> sma(std::span<const double> p, std::size_t n);
std::vector<double> ema(std::span<const double> p, std::size_t m);
std::vector<double> stddev(std::span<const double> p, std::size_t n);
std::vector<double> percent_b(std::span<const double> p, std::size_t n);
std::vector<double> bandwidth(std::span<const double> p, std::size_t n);
std::vector<double> macd_line(std::span<const double> p, std::size_t fast, std::size_t slow);
std::vector<double> macd_signal(std::span<const double> p, std::size_t fast, std::size_t slow, std::size_t sig);
std::vector<double> rsi_first(std::span<const double> p, std::size_t n);
std::vector<double> rsi_smoothed(std::span<const double> p, std::size_t n);

// Squared-hinge objective in long double.
Real svm_objective(const cwf::Matrix& x, std::span<const int> t, std::span<const double> s, double c,
                   std::span<const Real> w, Real b);

// Cyclic coordinate descent with a golden-section search on every coordinate.
// Returns (w..., b) of a minimizer.
std::vector<Real> svm_minimize(const cwf::Matrix& x, std::span<const int> t, std::span<const double> s, double c,
                               std::size_t sweeps = 4000);

// Geometric random walk of hourly closes.
std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n, double start = 1000.0, double sigma = 0.01);

// Hourly candle series with the given closes (open = previous close).
cwf::CandleSeries candles_from_closes(std::span<const double> closes, cwf::Timestamp start);

// Three uniformly random scores per bar in [-1.5, 1.5].
cwf::PredictionStream random_stream(std::mt19937_64& rng, const std::vector<cwf::Timestamp>& timestamps,
                                    double gamma = 0.0);

bool close_rel(double a, double b, double tol);

struct ForcedTrade {
    const char* timestamp;
    double price;
    bool buy;
};

// The twelve fills of the March 2018 reference ledger.
std::vector<ForcedTrade> example_ledger_trades();

struct Replay {
    cwf::CandleSeries prices;
    cwf::PredictionStream stream;
};

// Hourly bars from the first trade's day to two hours past the last trade. The
// close between trades stays at the previous fill price and each fill bar
// carries a decisive c1 (buy) or c2 (sell) prediction; other bars predict c3.
Replay forced_replay(const std::vector<ForcedTrade>& trades);

// Recomputes the portfolio from the trade list alone (long double) and checks
// alternation, the all-in invariant, every equity mark, and the closed-form
// round-trip identity. Returns an empty string when everything holds.
std::string check_accounting(const cwf::BacktestResult& result, double tol);

}  // namespace oracle
