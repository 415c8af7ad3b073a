#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cwf/market_data.hpp"
#include "cwf/matrix.hpp"

namespace cwf {

struct IndicatorConfig {
    std::size_t bollinger_window = 20;
    std::size_t macd_fast = 12;
    std::size_t macd_slow = 26;
    std::size_t macd_signal = 26;
    std::size_t rsi_window = 14;
    ResponseMode response_mode = ResponseMode::paper;

    // Throws ConfigError when a window is zero or macd_fast >= macd_slow.
    void validate() const;
};

enum class FeatureKind {
    percent_b,
    bandwidth,
    macd_line,
    macd_signal,
    macd_histogram,
    rsi_first,
    rsi_smoothed,
    response,   // k-bar response, parameter k
    sma,        // raw moving average, parameter n
    ema,        // raw exponential average, parameter m
    volume_z,   // volume z-score over the Bollinger window
    extra,      // named extra column
    all_extras  // every extra column of the series, in file order
};

struct FeatureSpec {
    FeatureKind kind = FeatureKind::percent_b;
    std::size_t parameter = 0;
    std::string column;

    // Text forms: pct_b, bandwidth, macd, macd_signal, macd_hist, rsi_first,
    // rsi_smoothed, ret:<k>, sma:<n>, ema:<m>, volume_z, extra:<name>, extras.
    static FeatureSpec parse(const std::string& text);
    std::string to_string() const;

    bool operator==(const FeatureSpec&) const = default;
};

// The reference feature set: %b, bandwidth, MACD line/signal/histogram, RSI
// first/smoothed, ret_k for k in {1,2,3,6,12,24}, volume_z. 14 columns, plus
// every extra column of the series.
std::vector<FeatureSpec> default_feature_selection();
inline constexpr std::size_t kDefaultFeatureCount = 14;

struct FeatureMatrix {
    std::vector<Timestamp> timestamps;
    std::vector<std::string> feature_names;
    Matrix rows;
    std::size_t warmup_dropped = 0;

    std::size_t size() const noexcept { return timestamps.size(); }
    std::size_t width() const noexcept { return feature_names.size(); }
};

// Evaluates every selected column on the series' closes (volumes for volume_z)
// and drops the leading bars where any column is still undefined.
FeatureMatrix build_feature_matrix(const CandleSeries& series, const IndicatorConfig& config,
                                   std::span<const FeatureSpec> selection);

void write_feature_matrix(std::ostream& out, const FeatureMatrix& features);
FeatureMatrix read_feature_matrix(std::istream& in);

}  // namespace cwf
