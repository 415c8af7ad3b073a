#include "cwf/indicators.hpp"

#include <algorithm>
#include <string>

#include "cwf/error.hpp"

namespace cwf {

namespace {

void require_length(std::span<const double> values, std::size_t n, const char* what) {
    if (n < 1) {
        throw std::invalid_argument(std::string(what) + ": window must be >= 1");
    }
    if (values.size() < n) {
        throw ValidationError(std::string(what) + ": series of length " + std::to_string(values.size()) +
                              " is shorter than the window " + std::to_string(n));
    }
}

// Mean and population variance of the window ending at `last`, two-pass with
// the compensated mean correction. Constant windows come out exactly constant.
class RollingMoments {
public:
    explicit RollingMoments(std::span<const double> values, std::size_t n) : values_(values), n_(n) {}

    void advance_to(std::size_t last) {
        const std::size_t first = last + 1 - n_;
        const double dn = static_cast<double>(n_);
        double sum = 0.0;
        bool constant = true;
        for (std::size_t i = first; i <= last; ++i) {
            sum += values_[i];
            constant = constant && values_[i] == values_[first];
        }
        if (constant) {
            mean_ = values_[first];
            variance_ = 0.0;
            return;
        }
        mean_ = sum / dn;
        double m2 = 0.0;
        double drift = 0.0;
        for (std::size_t i = first; i <= last; ++i) {
            const double d = values_[i] - mean_;
            m2 += d * d;
            drift += d;
        }
        mean_ += drift / dn;
        variance_ = std::max(0.0, (m2 - drift * drift / dn) / dn);
    }

    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return variance_; }

private:
    std::span<const double> values_;
    std::size_t n_;
    double mean_ = 0.0;
    double variance_ = 0.0;
};

IndicatorSeries undefined_series(std::size_t size, std::size_t warmup) {
    return {std::vector<double>(size, kUndefined), warmup};
}

}  // namespace

IndicatorSeries sma(std::span<const double> prices, std::size_t n) {
    require_length(prices, n, "sma");
    IndicatorSeries out = undefined_series(prices.size(), n - 1);
    // Neumaier-compensated running sum.
    double sum = 0.0;
    double comp = 0.0;
    auto add = [&](double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    };
    for (std::size_t i = 0; i < prices.size(); ++i) {
        add(prices[i]);
        if (i >= n) {
            add(-prices[i - n]);
        }
        if (i + 1 >= n) {
            out.values[i] = (sum + comp) / static_cast<double>(n);
        }
    }
    return out;
}

IndicatorSeries ema(std::span<const double> prices, std::size_t m) {
    if (m < 1) {
        throw std::invalid_argument("ema: window must be >= 1");
    }
    if (prices.empty()) {
        throw ValidationError("ema: empty series");
    }
    const double alpha = 2.0 / (static_cast<double>(m) + 1.0);
    IndicatorSeries out{std::vector<double>(prices.size()), 0};
    out.values[0] = prices[0];
    for (std::size_t i = 1; i < prices.size(); ++i) {
        out.values[i] = alpha * prices[i] + (1.0 - alpha) * out.values[i - 1];
    }
    return out;
}

IndicatorSeries rolling_stddev(std::span<const double> values, std::size_t n) {
    require_length(values, n, "rolling_stddev");
    IndicatorSeries out = undefined_series(values.size(), n - 1);
    RollingMoments moments(values, n);
    for (std::size_t i = n - 1; i < values.size(); ++i) {
        moments.advance_to(i);
        out.values[i] = std::sqrt(moments.variance());
    }
    return out;
}

BollingerSeries bollinger(std::span<const double> prices, std::size_t n) {
    if (n < 2) {
        throw std::invalid_argument("bollinger: window must be >= 2");
    }
    require_length(prices, n, "bollinger");
    BollingerSeries out{undefined_series(prices.size(), n - 1), undefined_series(prices.size(), n - 1)};
    RollingMoments moments(prices, n);
    for (std::size_t i = n - 1; i < prices.size(); ++i) {
        moments.advance_to(i);
        const double ma = moments.mean();
        const double sigma = std::sqrt(moments.variance());
        const double upper = ma + 2.0 * sigma;
        const double lower = ma - 2.0 * sigma;
        if (upper == lower) {
            out.percent_b.values[i] = 0.5;
            out.bandwidth.values[i] = 0.0;
        } else {
            out.percent_b.values[i] = (prices[i] - lower) / (upper - lower);
            out.bandwidth.values[i] = (upper - lower) / ma;
        }
    }
    return out;
}

MacdSeries macd(std::span<const double> prices, std::size_t fast, std::size_t slow, std::size_t signal_window) {
    if (fast >= slow) {
        throw std::invalid_argument("macd: fast window must be shorter than the slow window");
    }
    const auto fast_ema = ema(prices, fast);
    const auto slow_ema = ema(prices, slow);
    MacdSeries out;
    out.line.values.resize(prices.size());
    for (std::size_t i = 0; i < prices.size(); ++i) {
        out.line.values[i] = fast_ema.values[i] - slow_ema.values[i];
    }
    out.signal = ema(out.line.values, signal_window);
    out.histogram.values.resize(prices.size());
    for (std::size_t i = 0; i < prices.size(); ++i) {
        out.histogram.values[i] = out.line.values[i] - out.signal.values[i];
    }
    return out;
}

double rsi_value(double average_gain, double average_loss) {
    if (average_loss == 0.0 && average_gain == 0.0) {
        return 50.0;
    }
    if (average_loss == 0.0) {
        return 100.0;
    }
    if (average_gain == 0.0) {
        return 0.0;
    }
    return 100.0 - 100.0 / (1.0 + average_gain / average_loss);
}

RsiSeries rsi(std::span<const double> prices, std::size_t n) {
    if (n < 1) {
        throw std::invalid_argument("rsi: window must be >= 1");
    }
    if (prices.size() < n + 1) {
        throw ValidationError("rsi: series of length " + std::to_string(prices.size()) + " needs at least " +
                              std::to_string(n + 1) + " prices");
    }
    const std::size_t size = prices.size();
    std::vector<double> gains(size, 0.0), losses(size, 0.0);
    for (std::size_t t = 1; t < size; ++t) {
        const double r = (prices[t] - prices[t - 1]) / prices[t - 1];
        gains[t] = std::max(0.0, r);
        losses[t] = std::abs(std::min(0.0, r));
    }
    RsiSeries out{undefined_series(size, n), undefined_series(size, n)};
    const double dn = static_cast<double>(n);

    // Window sums are recomputed from scratch when their nonzero count drops to
    // zero so that "no losses in the window" is detected exactly.
    double gain_sum = 0.0, loss_sum = 0.0;
    std::size_t gain_count = 0, loss_count = 0;
    for (std::size_t t = 1; t <= n; ++t) {
        gain_sum += gains[t];
        loss_sum += losses[t];
        gain_count += gains[t] > 0.0;
        loss_count += losses[t] > 0.0;
    }
    double smooth_gain = gain_sum / dn;
    double smooth_loss = loss_sum / dn;
    for (std::size_t t = n; t < size; ++t) {
        if (t > n) {
            gain_sum += gains[t] - gains[t - n];
            loss_sum += losses[t] - losses[t - n];
            gain_count += (gains[t] > 0.0);
            gain_count -= (gains[t - n] > 0.0);
            loss_count += (losses[t] > 0.0);
            loss_count -= (losses[t - n] > 0.0);
            if (gain_count == 0) {
                gain_sum = 0.0;
            }
            if (loss_count == 0) {
                loss_sum = 0.0;
            }
            smooth_gain = (smooth_gain * (dn - 1.0) + gains[t]) / dn;
            smooth_loss = (smooth_loss * (dn - 1.0) + losses[t]) / dn;
        }
        out.first.values[t] = rsi_value(gain_sum / dn, loss_sum / dn);
        out.smoothed.values[t] = rsi_value(smooth_gain, smooth_loss);
    }
    return out;
}

IndicatorSeries rolling_zscore(std::span<const double> values, std::size_t n) {
    require_length(values, n, "rolling_zscore");
    IndicatorSeries out = undefined_series(values.size(), n - 1);
    RollingMoments moments(values, n);
    for (std::size_t i = n - 1; i < values.size(); ++i) {
        moments.advance_to(i);
        const double sd = std::sqrt(moments.variance());
        out.values[i] = sd == 0.0 ? 0.0 : (values[i] - moments.mean()) / sd;
    }
    return out;
}

}  // namespace cwf
