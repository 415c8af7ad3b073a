#pragma once

#include <chrono>
#include <string>

#include "cwf/market_data.hpp"

namespace cwf {

// Exchange REST endpoint serving hourly candles in the Coinbase Exchange shape:
// GET {base_url}/products/{product}/candles?start=..&end=..&granularity=3600
// returning [[time, low, high, open, close, volume], ...].
struct EndpointConfig {
    std::string base_url = "https://api.exchange.coinbase.com";
    std::string product = "BTC-USD";
    int page_size = 300;
    int retries = 3;
    std::chrono::milliseconds backoff{500};
    std::chrono::milliseconds max_backoff{8000};
    std::chrono::milliseconds timeout{10000};
};

// Fetches [start, end) page by page. Transport failures and 5xx responses are
// retried with doubling backoff; 429 responses pause for Retry-After (or the
// current backoff). The assembled rows go through assemble_series and
// validate_and_repair like any file input.
CandleSeries fetch_remote_candles(const std::string& symbol, Timestamp start, Timestamp end,
                                  const EndpointConfig& endpoint, const GapPolicy& policy = {});

}  // namespace cwf
