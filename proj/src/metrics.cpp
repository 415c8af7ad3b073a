#include "cwf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "cwf/error.hpp"
#include "cwf/format.hpp"
#include "cwf/indicators.hpp"

namespace cwf {

namespace {

// Label index per prediction, or npos for bars past the last label.
std::vector<std::size_t> align(const PredictionStream& stream, const LabeledDataset& labels) {
    constexpr auto npos = static_cast<std::size_t>(-1);
    std::unordered_map<std::int64_t, std::size_t> by_time;
    by_time.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_time.emplace(to_unix(labels.timestamps[i]), i);
    }
    std::vector<std::size_t> out;
    out.reserve(stream.size());
    const std::optional<Timestamp> last =
        labels.timestamps.empty() ? std::nullopt : std::optional<Timestamp>(labels.timestamps.back());
    for (const auto& p : stream.predictions) {
        const auto it = by_time.find(to_unix(p.timestamp));
        if (it != by_time.end()) {
            out.push_back(it->second);
        } else if (!last || p.timestamp > *last) {
            out.push_back(npos);
        } else {
            throw ValidationError("no label for prediction at " + format_iso8601(p.timestamp));
        }
    }
    return out;
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) {
        return std::nullopt;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

void tally(ConfusionSummary& s, const Prediction& gated, ClassLabel actual) {
    ++s.bars;
    if (!gated.actionable) {
        return;
    }
    if (gated.argmax == ClassLabel::up) {
        ++s.predicted_positive;
        s.true_positive += actual == ClassLabel::up;
    } else if (gated.argmax == ClassLabel::down) {
        ++s.predicted_negative;
        s.true_negative += actual == ClassLabel::down;
    }
}

void finish(ConfusionSummary& s) {
    s.ppv = ratio(s.true_positive, s.predicted_positive);
    s.npv = ratio(s.true_negative, s.predicted_negative);
}

Prediction gate(const Prediction& p, double gamma) {
    if (!p.has_model) {
        Prediction q = p;
        q.actionable = false;
        return q;
    }
    return predict_with_gamma(p.scores, gamma, p.timestamp);
}

std::string na_or(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

ConfusionSummary ppv_npv(const PredictionStream& stream, const LabeledDataset& labels, double gamma) {
    const auto index = align(stream, labels);
    ConfusionSummary s;
    s.gamma = gamma;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (index[i] == static_cast<std::size_t>(-1)) {
            continue;
        }
        tally(s, gate(stream.predictions[i], gamma), labels.labels[index[i]]);
    }
    finish(s);
    return s;
}

std::optional<double> overall_accuracy(const PredictionStream& stream, const LabeledDataset& labels) {
    const auto index = align(stream, labels);
    std::size_t hits = 0, total = 0;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (index[i] == static_cast<std::size_t>(-1) || !stream.predictions[i].has_model) {
            continue;
        }
        ++total;
        hits += stream.predictions[i].argmax == labels.labels[index[i]];
    }
    return ratio(hits, total);
}

std::vector<double> default_gamma_grid() {
    std::vector<double> out;
    for (int i = 0; i <= 10; ++i) {
        out.push_back(i / 10.0);
    }
    return out;
}

std::vector<GammaSweepRow> gamma_sweep(const PredictionStream& stream, const LabeledDataset& labels,
                                       std::span<const double> gammas, unsigned anchor_day) {
    const auto index = align(stream, labels);
    std::vector<GammaSweepRow> rows;
    std::vector<GammaSweepRow> monthly;
    std::vector<GammaSweepRow> means;
    for (double gamma : gammas) {
        ConfusionSummary pooled;
        std::map<Timestamp, ConfusionSummary> by_month;
        for (std::size_t i = 0; i < stream.size(); ++i) {
            if (index[i] == static_cast<std::size_t>(-1)) {
                continue;
            }
            const auto& p = stream.predictions[i];
            const Prediction gated = gate(p, gamma);
            const ClassLabel actual = labels.labels[index[i]];
            tally(pooled, gated, actual);
            tally(by_month[anchored_month_start(p.timestamp, anchor_day)], gated, actual);
        }
        finish(pooled);
        rows.push_back({"pooled", gamma, pooled.ppv, pooled.npv, pooled.predicted_positive, pooled.predicted_negative});
        double ppv_sum = 0.0, npv_sum = 0.0;
        std::size_t ppv_n = 0, npv_n = 0, pos = 0, neg = 0;
        for (auto& [month, s] : by_month) {
            finish(s);
            monthly.push_back(
                {format_iso8601(month), gamma, s.ppv, s.npv, s.predicted_positive, s.predicted_negative});
            if (s.ppv) {
                ppv_sum += *s.ppv;
                ++ppv_n;
            }
            if (s.npv) {
                npv_sum += *s.npv;
                ++npv_n;
            }
            pos += s.predicted_positive;
            neg += s.predicted_negative;
        }
        GammaSweepRow mean{"month_mean", gamma, std::nullopt, std::nullopt, pos, neg};
        if (ppv_n > 0) mean.ppv = ppv_sum / static_cast<double>(ppv_n);
        if (npv_n > 0) mean.npv = npv_sum / static_cast<double>(npv_n);
        means.push_back(mean);
    }
    rows.insert(rows.end(), means.begin(), means.end());
    rows.insert(rows.end(), monthly.begin(), monthly.end());
    return rows;
}

void write_gamma_sweep(std::ostream& out, const std::vector<GammaSweepRow>& rows, const std::string& scope) {
    const bool by_month = scope == "by_month";
    out << (by_month ? "month," : "") << "gamma,ppv,npv,n_pos,n_neg\n";
    for (const auto& r : rows) {
        const bool is_month = r.scope != "pooled" && r.scope != "month_mean";
        if (by_month ? !is_month : r.scope != scope) {
            continue;
        }
        if (by_month) {
            out << r.scope << ',';
        }
        out << format_double(r.gamma) << ',' << na_or(r.ppv) << ',' << na_or(r.npv) << ',' << r.n_pos << ','
            << r.n_neg << '\n';
    }
}

std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
    if (series.size() <= max_lag + 1) {
        throw ValidationError("series of length " + std::to_string(series.size()) + " is too short for " +
                              std::to_string(max_lag) + " lags");
    }
    const double n = static_cast<double>(series.size());
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
    double denom = 0.0;
    for (double x : series) {
        denom += (x - mean) * (x - mean);
    }
    if (!(denom > 0.0)) {
        throw DomainError("autocorrelation of a constant series is undefined");
    }
    std::vector<double> out(max_lag + 1);
    out[0] = 1.0;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t + k < series.size(); ++t) {
            num += (series[t] - mean) * (series[t + k] - mean);
        }
        out[k] = num / denom;
    }
    return out;
}

std::vector<double> pacf_from_acf(std::span<const double> rho) {
    if (rho.empty()) {
        return {};
    }
    const std::size_t max_lag = rho.size() - 1;
    std::vector<double> out(max_lag + 1, 0.0);
    out[0] = 1.0;
    std::vector<double> phi(max_lag + 1, 0.0), prev(max_lag + 1, 0.0);
    double v = 1.0;  // innovation variance ratio
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double num = rho[k];
        for (std::size_t j = 1; j < k; ++j) {
            num -= prev[j] * rho[k - j];
        }
        const double phi_kk = num / v;
        phi[k] = phi_kk;
        for (std::size_t j = 1; j < k; ++j) {
            phi[j] = prev[j] - phi_kk * prev[k - j];
        }
        v *= 1.0 - phi_kk * phi_kk;
        out[k] = phi_kk;
        std::copy(phi.begin(), phi.begin() + static_cast<std::ptrdiff_t>(k) + 1, prev.begin());
    }
    return out;
}

std::vector<double> pacf(std::span<const double> series, std::size_t max_lag) {
    return pacf_from_acf(acf(series, max_lag));
}

TimedSeries rolling_volatility(const ReturnSeries& returns, std::size_t window) {
    if (window == 0) {
        throw std::invalid_argument("volatility window must be >= 1");
    }
    if (returns.size() < window) {
        throw ValidationError("volatility window of " + std::to_string(window) + " exceeds the " +
                              std::to_string(returns.size()) + "-bar return series");
    }
    const auto sd = rolling_stddev(returns.values, window);
    TimedSeries out;
    for (std::size_t i = sd.warmup; i < sd.size(); ++i) {
        out.timestamps.push_back(returns.timestamps[i]);
        out.values.push_back(sd[i]);
    }
    return out;
}

ActivityPeriod activity_period_from_string(const std::string& text) {
    if (text == "week") return ActivityPeriod::week;
    if (text == "month") return ActivityPeriod::month;
    throw ConfigError("activity period must be 'week' or 'month'");
}

std::optional<double> spearman_correlation(std::span<const double> a, std::span<const double> b) {
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < order.size();) {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
                ++j;
            }
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) {
                r[order[k]] = avg;
            }
            i = j + 1;
        }
        return r;
    };
    if (a.size() != b.size()) {
        throw std::invalid_argument("correlation inputs differ in length");
    }
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    return pearson_correlation(ra, rb);
}

ActivityReport activity_report(const BacktestResult& result, const TimedSeries& volatility, ActivityPeriod period,
                               unsigned anchor_day) {
    if (result.bars() == 0) {
        throw ValidationError("backtest has no bars");
    }
    auto period_start = [&](Timestamp t) {
        return period == ActivityPeriod::week ? week_start(t) : anchored_month_start(t, anchor_day);
    };
    auto next_start = [&](Timestamp t) {
        return period == ActivityPeriod::week ? t + std::chrono::days{7} : add_months(t, 1);
    };
    const Timestamp first = result.timestamps.front();
    const Timestamp run_end = result.timestamps.back() + kHour;
    if (next_start(first) > run_end) {
        throw ValidationError("backtest spans less than one reporting period");
    }

    ActivityReport report;
    report.period = period;
    double prev_equity = result.config.initial_cash;
    double prev_close = result.closes.front();
    std::size_t bar = 0, trade = 0, vol = 0;
    for (Timestamp start = period_start(first); start < run_end; start = next_start(start)) {
        const Timestamp end = next_start(start);
        ActivityRow row;
        row.start = start;
        std::optional<std::size_t> last_bar;
        while (bar < result.bars() && result.timestamps[bar] < end) {
            last_bar = bar++;
        }
        while (trade < result.trades.size() && result.trades[trade].timestamp < end) {
            ++row.trades;
            ++trade;
        }
        double vol_sum = 0.0;
        std::size_t vol_n = 0;
        while (vol < volatility.timestamps.size() && volatility.timestamps[vol] < end) {
            if (volatility.timestamps[vol] >= start) {
                vol_sum += volatility.values[vol];
                ++vol_n;
            }
            ++vol;
        }
        if (vol_n > 0) {
            row.mean_volatility = vol_sum / static_cast<double>(vol_n);
        }
        if (last_bar) {
            row.strategy_return = result.equity[*last_bar] / prev_equity - 1.0;
            row.market_return = result.closes[*last_bar] / prev_close - 1.0;
            prev_equity = result.equity[*last_bar];
            prev_close = result.closes[*last_bar];
        }
        report.rows.push_back(row);
    }
    std::vector<double> vols, counts;
    for (const auto& r : report.rows) {
        if (r.mean_volatility) {
            vols.push_back(*r.mean_volatility);
            counts.push_back(static_cast<double>(r.trades));
        }
    }
    report.rank_correlation = spearman_correlation(vols, counts);
    return report;
}

nlohmann::json confusion_json(const ConfusionSummary& s) {
    using nlohmann::json;
    return {{"gamma", s.gamma},
            {"bars", s.bars},
            {"predicted_positive", s.predicted_positive},
            {"true_positive", s.true_positive},
            {"predicted_negative", s.predicted_negative},
            {"true_negative", s.true_negative},
            {"ppv", s.ppv ? json(*s.ppv) : json(nullptr)},
            {"npv", s.npv ? json(*s.npv) : json(nullptr)}};
}

void write_activity_report(std::ostream& out, const ActivityReport& report) {
    out << "period_start,trades,strategy_return,market_return,mean_volatility\n";
    for (const auto& r : report.rows) {
        out << format_iso8601(r.start) << ',' << r.trades << ',' << format_double(r.strategy_return) << ','
            << format_double(r.market_return) << ',' << na_or(r.mean_volatility) << '\n';
    }
}

}  // namespace cwf
