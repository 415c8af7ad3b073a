#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cwf/backtest.hpp"
#include "cwf/labeling.hpp"
#include "cwf/walkforward.hpp"

namespace cwf {

// Predicted positive = actionable c1, predicted negative = actionable c2; c3
// predictions count in neither. Ratios with an empty denominator are nullopt.
struct ConfusionSummary {
    double gamma = 0.0;
    std::size_t bars = 0;  // bars with both a prediction and a label
    std::size_t predicted_positive = 0;
    std::size_t true_positive = 0;
    std::size_t predicted_negative = 0;
    std::size_t true_negative = 0;
    std::optional<double> ppv;
    std::optional<double> npv;
};

// Joins predictions to labels by timestamp. Predictions after the last label
// (no realised response yet) are skipped; any other unmatched bar is a misalignment.
ConfusionSummary ppv_npv(const PredictionStream& stream, const LabeledDataset& labels, double gamma);

// Fraction of bars whose argmax equals the label, gamma ignored. Bars without a
// model are excluded. nullopt when no bar qualifies.
std::optional<double> overall_accuracy(const PredictionStream& stream, const LabeledDataset& labels);

struct GammaSweepRow {
    std::string scope;  // "pooled", "month_mean", or the month start
    double gamma = 0.0;
    std::optional<double> ppv;
    std::optional<double> npv;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

// Pooled counts, per-month rows, and the mean of the defined monthly ratios.
std::vector<GammaSweepRow> gamma_sweep(const PredictionStream& stream, const LabeledDataset& labels,
                                       std::span<const double> gammas, unsigned anchor_day = 5);
std::vector<double> default_gamma_grid();  // 0, 0.1, ..., 1.0

// Writes `gamma,ppv,npv,n_pos,n_neg` for the given scope, or with a leading
// `month` column when scope is "by_month". Unavailable ratios print as "NA".
void write_gamma_sweep(std::ostream& out, const std::vector<GammaSweepRow>& rows, const std::string& scope);

// Sample autocorrelation r_k = sum (x_t - m)(x_{t+k} - m) / sum (x_t - m)^2, k = 0..max_lag.
std::vector<double> acf(std::span<const double> series, std::size_t max_lag);
// Partial autocorrelation by Durbin-Levinson on the sample ACF, k = 0..max_lag (k = 0 is 1).
std::vector<double> pacf(std::span<const double> series, std::size_t max_lag);
std::vector<double> pacf_from_acf(std::span<const double> autocorrelations);

struct TimedSeries {
    std::vector<Timestamp> timestamps;
    std::vector<double> values;
};

// Trailing population std over `window` returns, stamped at each window's last bar.
TimedSeries rolling_volatility(const ReturnSeries& returns, std::size_t window);

enum class ActivityPeriod { week, month };
ActivityPeriod activity_period_from_string(const std::string& text);

struct ActivityRow {
    Timestamp start{};
    std::size_t trades = 0;
    double strategy_return = 0.0;
    double market_return = 0.0;
    std::optional<double> mean_volatility;
};

struct ActivityReport {
    ActivityPeriod period = ActivityPeriod::month;
    std::vector<ActivityRow> rows;
    std::optional<double> rank_correlation;  // Spearman, mean volatility vs trade count
};

ActivityReport activity_report(const BacktestResult& result, const TimedSeries& volatility, ActivityPeriod period,
                               unsigned anchor_day = 5);

// Spearman rank correlation with average ranks for ties.
std::optional<double> spearman_correlation(std::span<const double> a, std::span<const double> b);

nlohmann::json confusion_json(const ConfusionSummary& summary);
void write_activity_report(std::ostream& out, const ActivityReport& report);

}  // namespace cwf
