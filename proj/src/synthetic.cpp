#include "cwf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cwf/error.hpp"

namespace cwf {

CandleSeries planted_signal_series(const PlantedSignalOptions& options) {
    if (options.hours < 2) {
        throw std::invalid_argument("planted series needs at least 2 hours");
    }
    if (options.mode == ResponseMode::paper && !(options.start_price > 1.0)) {
        throw DomainError("response = \"paper\" needs prices above 1");
    }
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, 0.05);
    std::lognormal_distribution<double> volume(5.0, 0.5);

    const double th = options.threshold;
    const double anchor = std::log(options.start_price);
    std::vector<int> classes(options.hours, 2);  // class realised on arrival at bar t
    std::vector<double> closes(options.hours);
    closes[0] = options.start_price;
    for (std::size_t t = 1; t < options.hours; ++t) {
        // A mild pull back towards the starting level keeps prices bounded.
        const double level = std::log(closes[t - 1]);
        // Classes are equally likely apart from that pull.
        const double pull = std::clamp(2.0 * (anchor - level) / anchor, -0.1, 0.1);
        const double p_up = 1.0 / 3.0 + pull;
        const double p_down = 2.0 / 3.0 - p_up;
        const double u = unit(rng);
        const int cls = u < p_up ? 0 : (u < p_up + p_down ? 1 : 2);
        double r = 0.0;
        if (cls == 0) {
            r = th * (1.2 + 0.8 * unit(rng));
        } else if (cls == 1) {
            r = -th * (1.2 + 0.8 * unit(rng));
        } else {
            r = th * (1.6 * unit(rng) - 0.8);
        }
        classes[t] = cls;
        const double next_log = options.mode == ResponseMode::paper ? level * (1.0 + r) : level + r;
        closes[t] = std::exp(next_log);
    }

    std::vector<Candle> candles(options.hours);
    std::vector<ExtraColumn> extras = {{"signal_up", {}}, {"signal_down", {}}, {"signal_same", {}}};
    for (std::size_t t = 0; t < options.hours; ++t) {
        Candle& c = candles[t];
        c.timestamp = options.start + static_cast<long>(t) * kHour;
        c.close = closes[t];
        c.open = t == 0 ? closes[0] : closes[t - 1];
        c.high = std::max(c.open, c.close) * (1.0 + 0.002 * unit(rng));
        c.low = std::min(c.open, c.close) * (1.0 - 0.002 * unit(rng));
        c.volume = volume(rng);

        int announced = t + 1 < options.hours ? classes[t + 1] : static_cast<int>(rng() % 3);
        if (unit(rng) < options.label_noise) {
            announced = (announced + 1 + static_cast<int>(rng() % 2)) % 3;
        }
        for (int k = 0; k < 3; ++k) {
            extras[k].values.emplace_back((k == announced ? 1.0 : 0.0) + jitter(rng));
        }
    }
    CandleSeries series = assemble_series("SYNTH", std::move(candles), std::move(extras));
    return series;
}

}  // namespace cwf
