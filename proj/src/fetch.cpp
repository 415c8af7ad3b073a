#include "cwf/fetch.hpp"

#include <algorithm>
#include <map>
#include <thread>

#include <httplib.h>

#include "cwf/error.hpp"

namespace cwf {

namespace {

std::string fetch_page(httplib::Client& client, const std::string& path, const EndpointConfig& endpoint) {
    auto backoff = endpoint.backoff;
    int failures = 0;
    int rate_limited = 0;
    std::string last_error;
    while (true) {
        auto res = client.Get(path);
        if (res && res->status == 200) {
            return res->body;
        }
        if (res && res->status == 429) {
            // Rate limits are not failures, but an endpoint that never lets up is.
            if (++rate_limited > 4 * std::max(endpoint.retries, 1)) {
                throw TransportError("rate limited repeatedly on " + path);
            }
            auto pause = backoff;
            if (res->has_header("Retry-After")) {
                try {
                    pause = std::chrono::seconds{std::stol(res->get_header_value("Retry-After"))};
                } catch (const std::exception&) {
                }
            }
            std::this_thread::sleep_for(std::min(pause, endpoint.max_backoff));
            continue;
        }
        if (res && res->status >= 400 && res->status < 500) {
            throw TransportError("request " + path + " rejected with HTTP " + std::to_string(res->status) + ": " +
                                 res->body);
        }
        last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
        if (failures++ >= endpoint.retries) {
            throw TransportError("request " + path + " failed after " + std::to_string(failures) +
                                 " attempt(s): " + last_error);
        }
        std::this_thread::sleep_for(backoff);
        backoff = std::min(backoff * 2, endpoint.max_backoff);
    }
}

}  // namespace

CandleSeries fetch_remote_candles(const std::string& symbol, Timestamp start, Timestamp end,
                                  const EndpointConfig& endpoint, const GapPolicy& policy) {
    if (!is_hour_aligned(start) || !is_hour_aligned(end)) {
        throw ValidationError("fetch range must be hour-aligned");
    }
    if (endpoint.page_size < 1) {
        throw ConfigError("page_size must be >= 1");
    }
    CandleSeries empty;
    empty.symbol = symbol;
    if (end <= start) {
        return empty;
    }

    httplib::Client client(endpoint.base_url);
    const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
    const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - timeout_s);
    client.set_connection_timeout(timeout_s.count(), timeout_us.count());
    client.set_read_timeout(timeout_s.count(), timeout_us.count());

    std::map<Timestamp, Candle> rows;
    for (Timestamp page_start = start; page_start < end; page_start += endpoint.page_size * kHour) {
        const Timestamp page_end = std::min(end, page_start + endpoint.page_size * kHour);
        // The exchange treats `end` as inclusive.
        const std::string path = "/products/" + endpoint.product + "/candles?granularity=3600&start=" +
                                 format_iso8601(page_start) + "&end=" + format_iso8601(page_end - kHour);
        const std::string body = fetch_page(client, path, endpoint);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw TransportError("malformed candle page for " + path + ": " + e.what());
        }
        if (!doc.is_array()) {
            throw TransportError("candle page for " + path + " is not a JSON array");
        }
        for (const auto& entry : doc) {
            if (!entry.is_array() || entry.size() < 6) {
                throw TransportError("candle entry must be [time, low, high, open, close, volume]");
            }
            Candle c;
            c.timestamp = from_unix(entry[0].get<std::int64_t>());
            c.low = entry[1].get<double>();
            c.high = entry[2].get<double>();
            c.open = entry[3].get<double>();
            c.close = entry[4].get<double>();
            c.volume = entry[5].get<double>();
            if (c.timestamp < page_start || c.timestamp >= page_end) {
                continue;
            }
            if (!rows.emplace(c.timestamp, c).second) {
                throw ValidationError("endpoint returned duplicate candle " + format_iso8601(c.timestamp));
            }
        }
    }
    std::vector<Candle> candles;
    candles.reserve(rows.size());
    for (auto& [ts, c] : rows) {
        candles.push_back(c);
    }
    return validate_and_repair(assemble_series(symbol, std::move(candles)), policy).series;
}

}  // namespace cwf
