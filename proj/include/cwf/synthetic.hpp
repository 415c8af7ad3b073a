#pragma once

#include <cstddef>
#include <cstdint>

#include "cwf/market_data.hpp"

namespace cwf {

// Hourly market whose next-hour class is announced one bar ahead by three extra
// columns (signal_up, signal_down, signal_same: a jittered one-hot code). With
// probability `label_noise` the code names a wrong class. Returns are drawn in
// the chosen response space so that the announced class is the realised one.
struct PlantedSignalOptions {
    std::size_t hours = 24 * 365 * 2;
    Timestamp start = from_unix(1514937600);  // 2018-01-03T00:00:00Z
    std::uint64_t seed = 1;
    double label_noise = 0.1;
    double start_price = 8000.0;
    double threshold = 0.005;
    ResponseMode mode = ResponseMode::paper;
};

CandleSeries planted_signal_series(const PlantedSignalOptions& options);

}  // namespace cwf
