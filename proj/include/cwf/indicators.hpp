#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace cwf {

// Indicator output aligned index-for-index with its input. Positions before
// `warmup` are undefined and hold NaN.
struct IndicatorSeries {
    std::vector<double> values;
    std::size_t warmup = 0;

    std::size_t size() const noexcept { return values.size(); }
    bool defined(std::size_t i) const noexcept { return i >= warmup && i < values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

// Simple moving average over the trailing n values.
IndicatorSeries sma(std::span<const double> prices, std::size_t n);

// EMA_t = a*P_t + (1-a)*EMA_{t-1}, a = 2/(m+1), seeded with EMA_0 = P_0.
IndicatorSeries ema(std::span<const double> prices, std::size_t m);

// Trailing population standard deviation (divide by n).
IndicatorSeries rolling_stddev(std::span<const double> values, std::size_t n);

struct BollingerSeries {
    IndicatorSeries percent_b;
    IndicatorSeries bandwidth;
};

// Bands at MA +/- 2 population standard deviations. A zero-width band yields
// %b = 0.5 and bandwidth = 0.
BollingerSeries bollinger(std::span<const double> prices, std::size_t n);

struct MacdSeries {
    IndicatorSeries line;
    IndicatorSeries signal;
    IndicatorSeries histogram;
};

// line = EMA(fast) - EMA(slow); signal = EMA(line, signal_window) seeded on the
// first line value; histogram = line - signal.
MacdSeries macd(std::span<const double> prices, std::size_t fast, std::size_t slow, std::size_t signal_window);

struct RsiSeries {
    IndicatorSeries first;
    IndicatorSeries smoothed;
};

// Relative strength index from simple returns R_t = P_t/P_{t-1} - 1.
//
// first:    average gain / average loss over the n most recent returns.
// smoothed: Wilder recursion G_t = (G_{t-1}(n-1) + gain_t)/n (same for losses),
//           seeded with the simple averages at the first defined bar.
//
// Zero average loss gives 100, zero average gain gives 0, both zero gives 50.
RsiSeries rsi(std::span<const double> prices, std::size_t n);

// RSI value for one (average gain, average loss) pair, with the conventions above.
double rsi_value(double average_gain, double average_loss);

// (x_t - mean) / population std over the trailing n values; 0 when the window is constant.
IndicatorSeries rolling_zscore(std::span<const double> values, std::size_t n);

}  // namespace cwf
