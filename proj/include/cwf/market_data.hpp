#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cwf/time.hpp"

namespace cwf {

struct Candle {
    Timestamp timestamp{};
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;

    bool operator==(const Candle&) const = default;
};

// Additional numeric series aligned one value per candle. nullopt marks a missing value.
struct ExtraColumn {
    std::string name;
    std::vector<std::optional<double>> values;

    bool operator==(const ExtraColumn&) const = default;
};

struct CandleSeries {
    std::string symbol;
    std::chrono::seconds interval = kHour;
    std::vector<Candle> candles;
    std::vector<ExtraColumn> extra_columns;

    std::size_t size() const noexcept { return candles.size(); }
    bool empty() const noexcept { return candles.empty(); }
    std::vector<double> closes() const;
    std::vector<double> volumes() const;
    const ExtraColumn* find_extra(const std::string& name) const;

    bool operator==(const CandleSeries&) const = default;
};

enum class TimestampFormat { automatic, unix_seconds, iso8601 };

struct CandleFileFormat {
    std::string symbol;
    char delimiter = ',';
    TimestampFormat timestamp = TimestampFormat::automatic;
};

// Reads `timestamp,open,high,low,close,volume[,<extra>...]`. Rows may come in any
// order; the result is sorted. Throws ParseError (with line) on malformed rows,
// non-positive prices, negative volume and duplicate timestamps.
CandleSeries parse_candles(std::istream& in, const CandleFileFormat& format = {});
CandleSeries load_candles(const std::string& path, const CandleFileFormat& format = {});

// Missing extra values are written as empty fields.
void write_candles(std::ostream& out, const CandleSeries& series,
                   TimestampFormat timestamps = TimestampFormat::unix_seconds);

// Sorts raw rows, rejects duplicates and non-positive prices. Shared by every ingestion path.
CandleSeries assemble_series(std::string symbol, std::vector<Candle> candles,
                             std::vector<ExtraColumn> extra_columns = {});

enum class GapAction { forward_fill, reject };

struct GapPolicy {
    GapAction action = GapAction::forward_fill;
    int max_fill_hours = 6;
};

struct RepairEntry {
    Timestamp timestamp{};
    std::string action;

    bool operator==(const RepairEntry&) const = default;
};

struct RepairResult {
    CandleSeries series;
    std::vector<RepairEntry> report;
};

// Enforces OHLC ordering, hour alignment and strict one-hour spacing. Missing hours
// are synthesized as O=H=L=C=previous close with zero volume (extra columns carry
// their previous value) when the run is short enough for the policy.
RepairResult validate_and_repair(const CandleSeries& series, const GapPolicy& policy = {});

nlohmann::json repair_report_json(const std::vector<RepairEntry>& report);

enum class ResponseMode {
    paper,      // (ln P_{t+1} - ln P_t) / ln P_t
    plain_log,  // ln P_{t+1} - ln P_t
};

std::string to_string(ResponseMode mode);
ResponseMode response_mode_from_string(const std::string& text);

// One value per consecutive pair of closes, stamped with the later bar.
struct ReturnSeries {
    std::vector<Timestamp> timestamps;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

// Response between two prices. The log-scaled mode requires both prices > 1.
double response_between(double from_price, double to_price, ResponseMode mode);

ReturnSeries compute_response(const CandleSeries& series, ResponseMode mode = ResponseMode::paper);

}  // namespace cwf
