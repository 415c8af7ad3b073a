#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cwf/svm.hpp"

namespace oracle {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Real window_mean(std::span<const double> p, std::size_t end, std::size_t n) {
    Real s = 0;
    for (std::size_t j = end + 1 - n; j <= end; ++j) s += p[j];
    return s / n;
}

Real window_std(std::span<const double> p, std::size_t end, std::size_t n) {
    const Real m = window_mean(p, end, n);
    Real s = 0;
    for (std::size_t j = end + 1 - n; j <= end; ++j) s += (p[j] - m) * (p[j] - m);
    return std::sqrt(s / n);
}

std::vector<Real> ema_real(std::span<const Real> p, std::size_t m) {
    const Real a = Real(2) / (m + 1);
    std::vector<Real> out(p.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
        out[t] = t == 0 ? p[0] : a * p[t] + (1 - a) * out[t - 1];
    }
    return out;
}

std::vector<Real> line_real(std::span<const double> p, std::size_t fast, std::size_t slow) {
    std::vector<Real> pr(p.begin(), p.end());
    const auto f = ema_real(pr, fast);
    const auto s = ema_real(pr, slow);
    std::vector<Real> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = f[i] - s[i];
    return out;
}

double rsi_of(Real gain, Real loss) {
    if (gain == 0 && loss == 0) return 50.0;
    if (loss == 0) return 100.0;
    if (gain == 0) return 0.0;
    return static_cast<double>(100 - 100 / (1 + gain / loss));
}

}  // namespace

std::vector<double> sma(std::span<const double> p, std::size_t n) {
    std::vector<double> out(p.size(), kNaN);
    for (std::size_t t = n - 1; t < p.size(); ++t) out[t] = static_cast<double>(window_mean(p, t, n));
    return out;
}

std::vector<double> ema(std::span<const double> p, std::size_t m) {
    std::vector<Real> pr(p.begin(), p.end());
    const auto e = ema_real(pr, m);
    return {e.begin(), e.end()};
}

std::vector<double> stddev(std::span<const double> p, std::size_t n) {
    std::vector<double> out(p.size(), kNaN);
    for (std::size_t t = n - 1; t < p.size(); ++t) out[t] = static_cast<double>(window_std(p, t, n));
    return out;
}

std::vector<double> percent_b(std::span<const double> p, std::size_t n) {
    std::vector<double> out(p.size(), kNaN);
    for (std::size_t t = n - 1; t < p.size(); ++t) {
        const Real m = window_mean(p, t, n);
        const Real sd = window_std(p, t, n);
        const Real lower = m - 2 * sd;
        const Real upper = m + 2 * sd;
        out[t] = sd == 0 ? 0.5 : static_cast<double>((p[t] - lower) / (upper - lower));
    }
    return out;
}

std::vector<double> bandwidth(std::span<const double> p, std::size_t n) {
    std::vector<double> out(p.size(), kNaN);
    for (std::size_t t = n - 1; t < p.size(); ++t) {
        const Real m = window_mean(p, t, n);
        const Real sd = window_std(p, t, n);
        out[t] = static_cast<double>((4 * sd) / m);
    }
    return out;
}

std::vector<double> macd_line(std::span<const double> p, std::size_t fast, std::size_t slow) {
    const auto l = line_real(p, fast, slow);
    return {l.begin(), l.end()};
}

std::vector<double> macd_signal(std::span<const double> p, std::size_t fast, std::size_t slow, std::size_t sig) {
    const auto l = line_real(p, fast, slow);
    const auto s = ema_real(l, sig);
    return {s.begin(), s.end()};
}

std::vector<double> rsi_first(std::span<const double> p, std::size_t n) {
    std::vector<double> out(p.size(), kNaN);
    for (std::size_t t = n; t < p.size(); ++t) {
        Real gain = 0;
        Real loss = 0;
        for (std::size_t j = t + 1 - n; j <= t; ++j) {
            const Real r = Real(p[j]) / p[j - 1] - 1;
            if (r > 0) gain += r;
            if (r < 0) loss -= r;
        }
        out[t] = rsi_of(gain / n, loss / n);
    }
    return out;
}

std::vector<double> rsi_smoothed(std::span<const double> p, std::size_t n) {
    std::vector<double> out(p.size(), kNaN);
    if (p.size() <= n) return out;
    Real gain = 0;
    Real loss = 0;
    for (std::size_t j = 1; j <= n; ++j) {
        const Real r = Real(p[j]) / p[j - 1] - 1;
        if (r > 0) gain += r;
        if (r < 0) loss -= r;
    }
    gain /= n;
    loss /= n;
    out[n] = rsi_of(gain, loss);
    for (std::size_t t = n + 1; t < p.size(); ++t) {
        const Real r = Real(p[t]) / p[t - 1] - 1;
        gain = (gain * (n - 1) + (r > 0 ? r : 0)) / n;
        loss = (loss * (n - 1) + (r < 0 ? -r : 0)) / n;
        out[t] = rsi_of(gain, loss);
    }
    return out;
}

Real svm_objective(const cwf::Matrix& x, std::span<const int> t, std::span<const double> s, double c,
                   std::span<const Real> w, Real b) {
    Real reg = 0;
    for (Real v : w) reg += v * v;
    Real loss = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        Real y = b;
        for (std::size_t j = 0; j < x.cols(); ++j) y += w[j] * x(i, j);
        const Real slack = std::max<Real>(0, 1 - t[i] * y);
        loss += s[i] * slack * slack;
    }
    return reg / 2 + c * loss;
}

std::vector<Real> svm_minimize(const cwf::Matrix& x, std::span<const int> t, std::span<const double> s, double c,
                               std::size_t sweeps) {
    const std::size_t d = x.cols();
    std::vector<Real> z(d + 1, 0);
    const auto f = [&](const std::vector<Real>& v) {
        return svm_objective(x, t, s, c, std::span<const Real>(v.data(), d), v[d]);
    };
    const Real phi = (std::sqrt(Real(5)) - 1) / 2;
    Real step = 1;
    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
        const Real before = f(z);
        for (std::size_t k = 0; k <= d; ++k) {
            // Bracket the coordinate minimum, then shrink it by golden sections.
            auto g = [&](Real v) {
                auto tmp = z;
                tmp[k] = v;
                return f(tmp);
            };
            Real lo = z[k] - step;
            Real hi = z[k] + step;
            while (g(lo) < g(z[k])) lo -= 2 * (z[k] - lo);
            while (g(hi) < g(z[k])) hi += 2 * (hi - z[k]);
            Real a = hi - phi * (hi - lo);
            Real bb = lo + phi * (hi - lo);
            Real fa = g(a);
            Real fb = g(bb);
            for (int it = 0; it < 120 && hi - lo > 1e-16L * (1 + std::abs(z[k])); ++it) {
                if (fa < fb) {
                    hi = bb;
                    bb = a;
                    fb = fa;
                    a = hi - phi * (hi - lo);
                    fa = g(a);
                } else {
                    lo = a;
                    a = bb;
                    fa = fb;
                    bb = lo + phi * (hi - lo);
                    fb = g(bb);
                }
            }
            const Real cand = (lo + hi) / 2;
            if (g(cand) <= g(z[k])) z[k] = cand;
        }
        const Real after = f(z);
        step = std::max<Real>(1e-6L, std::min<Real>(1, step));
        if (before - after <= 1e-18L * std::abs(after)) break;
    }
    return z;
}

std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n, double start, double sigma) {
    std::normal_distribution<double> step(0.0, sigma);
    std::vector<double> out(n);
    double p = start;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = p;
        p *= std::exp(step(rng));
    }
    return out;
}

cwf::CandleSeries candles_from_closes(std::span<const double> closes, cwf::Timestamp start) {
    std::vector<cwf::Candle> candles;
    for (std::size_t i = 0; i < closes.size(); ++i) {
        const double open = i == 0 ? closes[0] : closes[i - 1];
        candles.push_back({start + cwf::kHour * static_cast<long>(i), open, std::max(open, closes[i]),
                           std::min(open, closes[i]), closes[i], 10.0 + static_cast<double>(i % 7)});
    }
    return cwf::assemble_series("TEST", std::move(candles));
}

cwf::PredictionStream random_stream(std::mt19937_64& rng, const std::vector<cwf::Timestamp>& timestamps,
                                    double gamma) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    cwf::PredictionStream stream;
    for (auto ts : timestamps) {
        cwf::Scores s{u(rng), u(rng), u(rng)};
        stream.predictions.push_back(cwf::predict_with_gamma(s, gamma, ts));
        stream.epoch_of.push_back(0);
    }
    stream.models.push_back(nullptr);
    return stream;
}

bool close_rel(double a, double b, double tol) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

std::vector<ForcedTrade> example_ledger_trades() {
    return {
        {"2018-03-09T05:00:00Z", 8499.90, true},  {"2018-03-09T06:00:00Z", 8815.08, false},
        {"2018-03-11T00:00:00Z", 8529.96, true},  {"2018-03-11T17:00:00Z", 9631.78, false},
        {"2018-03-14T17:00:00Z", 8335.12, true},  {"2018-03-15T02:00:00Z", 7797.50, false},
        {"2018-03-15T05:00:00Z", 7791.95, true},  {"2018-03-15T08:00:00Z", 8194.61, false},
        {"2018-03-30T00:00:00Z", 6815.01, true},  {"2018-03-30T05:00:00Z", 7110.39, false},
        {"2018-04-01T15:00:00Z", 6450.01, true},  {"2018-04-01T16:00:00Z", 6805.01, false},
    };
}

Replay forced_replay(const std::vector<ForcedTrade>& trades) {
    const auto first = *cwf::parse_iso8601(trades.front().timestamp);
    const auto start = first - std::chrono::seconds{cwf::to_unix(first) % 86400};
    const auto end = *cwf::parse_iso8601(trades.back().timestamp) + 2 * cwf::kHour;
    std::vector<double> closes;
    std::vector<cwf::Timestamp> stamps;
    std::size_t next = 0;
    double level = trades.front().price;
    Replay r;
    for (auto t = start; t <= end; t += cwf::kHour) {
        cwf::Scores s{-1.0, -1.0, 1.0};
        if (next < trades.size() && *cwf::parse_iso8601(trades[next].timestamp) == t) {
            level = trades[next].price;
            s = trades[next].buy ? cwf::Scores{1.0, -1.0, -1.0} : cwf::Scores{-1.0, 1.0, -1.0};
            ++next;
        }
        closes.push_back(level);
        stamps.push_back(t);
        r.stream.predictions.push_back(cwf::predict_with_gamma(s, 0.0, t));
        r.stream.epoch_of.push_back(0);
    }
    r.stream.models.push_back(nullptr);
    r.prices = candles_from_closes(closes, start);
    return r;
}

std::string check_accounting(const cwf::BacktestResult& result, double tol) {
    const auto& cfg = result.config;
    const Real f = cfg.fee;
    Real cash = cfg.initial_cash;
    Real coins = 0;
    Real ratio_product = 1;
    Real last_buy = 0;
    std::size_t round_trips = 0;
    std::size_t trade = 0;
    const auto fail = [](const std::string& what, std::size_t i) { return what + " at bar " + std::to_string(i); };
    for (std::size_t i = 0; i < result.bars(); ++i) {
        while (trade < result.trades.size() && result.trades[trade].timestamp == result.timestamps[i]) {
            const auto& t = result.trades[trade];
            if (t.unit_price != result.closes[i]) return fail("fill price differs from the close", i);
            if (t.side == cwf::TradeSide::buy) {
                if (coins != 0) return fail("buy while holding coins", i);
                if (!close_rel(t.fee, static_cast<double>(cash * f), tol)) return fail("buy fee", i);
                coins = cash * (1 - f) / t.unit_price;
                cash = 0;
                last_buy = t.unit_price;
                if (!close_rel(t.quantity, static_cast<double>(coins), tol)) return fail("buy quantity", i);
            } else {
                if (coins == 0) return fail("sell without coins", i);
                if (!close_rel(t.quantity, static_cast<double>(coins), tol)) return fail("sell quantity", i);
                if (!close_rel(t.fee, static_cast<double>(coins * t.unit_price * f), tol)) return fail("sell fee", i);
                cash = coins * t.unit_price * (1 - f);
                coins = 0;
                ratio_product *= Real(t.unit_price) / last_buy;
                ++round_trips;
            }
            ++trade;
        }
        const bool holding = coins != 0;
        if (holding != result.in_position[i]) return fail("position flag", i);
        if (holding && cash != 0) return fail("all-in invariant (cash and coins)", i);
        const Real mark = holding ? coins * result.closes[i] : cash;
        if (!close_rel(result.equity[i], static_cast<double>(mark), tol)) return fail("equity mark", i);
    }
    if (trade != result.trades.size()) return "trades outside the run";
    // Closed-form identity over completed round trips.
    Real expected = cfg.initial_cash * ratio_product;
    for (std::size_t k = 0; k < 2 * round_trips; ++k) expected *= (1 - f);
    if (coins == 0) {
        if (!close_rel(result.final_state.cash, static_cast<double>(expected), tol)) return "final cash identity";
    } else {
        const Real held = expected * (1 - f) / last_buy;
        if (!close_rel(result.final_state.coins, static_cast<double>(held), tol)) return "final coin identity";
    }
    return {};
}

}  // namespace oracle
