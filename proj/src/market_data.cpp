#include "cwf/market_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cwf/error.hpp"
#include "cwf/format.hpp"

namespace cwf {

namespace {

const char* const kRequiredColumns[] = {"timestamp", "open", "high", "low", "close", "volume"};

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool looks_like_unix(std::string_view field) {
    if (field.empty()) {
        return false;
    }
    std::size_t i = field.front() == '-' ? 1 : 0;
    if (i == field.size()) {
        return false;
    }
    for (; i < field.size(); ++i) {
        if (field[i] < '0' || field[i] > '9') {
            return false;
        }
    }
    return true;
}

std::optional<Timestamp> parse_timestamp(std::string_view field, TimestampFormat format) {
    if (format == TimestampFormat::unix_seconds) {
        std::int64_t secs = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), secs);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
            return std::nullopt;
        }
        return from_unix(secs);
    }
    return parse_iso8601(field);
}

std::string describe(std::size_t line) { return "line " + std::to_string(line); }

}  // namespace

std::vector<double> CandleSeries::closes() const {
    std::vector<double> out;
    out.reserve(candles.size());
    for (const auto& c : candles) {
        out.push_back(c.close);
    }
    return out;
}

std::vector<double> CandleSeries::volumes() const {
    std::vector<double> out;
    out.reserve(candles.size());
    for (const auto& c : candles) {
        out.push_back(c.volume);
    }
    return out;
}

const ExtraColumn* CandleSeries::find_extra(const std::string& name) const {
    for (const auto& col : extra_columns) {
        if (col.name == name) {
            return &col;
        }
    }
    return nullptr;
}

CandleSeries assemble_series(std::string symbol, std::vector<Candle> candles,
                             std::vector<ExtraColumn> extra_columns) {
    for (const auto& col : extra_columns) {
        if (col.values.size() != candles.size()) {
            throw ValidationError("extra column '" + col.name + "' has " + std::to_string(col.values.size()) +
                                  " values for " + std::to_string(candles.size()) + " candles");
        }
    }
    for (const auto& c : candles) {
        if (!(c.open > 0 && c.high > 0 && c.low > 0 && c.close > 0)) {
            throw ValidationError("non-positive price at " + format_iso8601(c.timestamp));
        }
        if (!(c.volume >= 0)) {
            throw ValidationError("negative volume at " + format_iso8601(c.timestamp));
        }
    }
    std::vector<std::size_t> order(candles.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return candles[a].timestamp < candles[b].timestamp; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (candles[order[i]].timestamp == candles[order[i - 1]].timestamp) {
            throw ValidationError("duplicate timestamp " + format_iso8601(candles[order[i]].timestamp));
        }
    }

    CandleSeries series;
    series.symbol = std::move(symbol);
    series.candles.reserve(candles.size());
    for (std::size_t idx : order) {
        series.candles.push_back(candles[idx]);
    }
    for (auto& col : extra_columns) {
        ExtraColumn sorted{col.name, {}};
        sorted.values.reserve(order.size());
        for (std::size_t idx : order) {
            sorted.values.push_back(col.values[idx]);
        }
        series.extra_columns.push_back(std::move(sorted));
    }
    return series;
}

CandleSeries parse_candles(std::istream& in, const CandleFileFormat& format) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            for (auto field : split_fields(line, format.delimiter)) {
                header.push_back(lower(field));
            }
            break;
        }
    }
    if (header.empty()) {
        throw ParseError("missing header row", line_no);
    }
    if (header.size() < 6) {
        throw ParseError("header must start with timestamp,open,high,low,close,volume", line_no);
    }
    for (std::size_t i = 0; i < 6; ++i) {
        if (header[i] != kRequiredColumns[i]) {
            throw ParseError("header column " + std::to_string(i + 1) + " must be '" + kRequiredColumns[i] +
                                 "', found '" + header[i] + "'",
                             line_no);
        }
    }
    std::vector<ExtraColumn> extras;
    for (std::size_t i = 6; i < header.size(); ++i) {
        if (header[i].empty()) {
            throw ParseError("empty extra column name", line_no);
        }
        for (const auto& e : extras) {
            if (e.name == header[i]) {
                throw ParseError("duplicate column '" + header[i] + "'", line_no);
            }
        }
        extras.push_back({header[i], {}});
    }

    TimestampFormat ts_format = format.timestamp;
    std::vector<Candle> candles;
    std::vector<std::size_t> source_lines;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line, format.delimiter);
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        if (ts_format == TimestampFormat::automatic) {
            ts_format = looks_like_unix(fields[0]) ? TimestampFormat::unix_seconds : TimestampFormat::iso8601;
        }
        const auto ts = parse_timestamp(fields[0], ts_format);
        if (!ts) {
            throw ParseError("malformed timestamp '" + std::string(fields[0]) + "'", line_no);
        }
        double values[5];
        for (std::size_t i = 0; i < 5; ++i) {
            const auto v = parse_double(fields[i + 1]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError("malformed " + std::string(kRequiredColumns[i + 1]) + " value '" +
                                     std::string(fields[i + 1]) + "'",
                                 line_no);
            }
            values[i] = *v;
        }
        Candle c{*ts, values[0], values[1], values[2], values[3], values[4]};
        if (!(c.open > 0 && c.high > 0 && c.low > 0 && c.close > 0)) {
            throw ParseError("non-positive price", line_no);
        }
        if (c.volume < 0) {
            throw ParseError("negative volume", line_no);
        }
        for (std::size_t i = 6; i < fields.size(); ++i) {
            const auto f = fields[i];
            const std::string lf = lower(f);
            if (f.empty() || lf == "nan" || lf == "na" || lf == "null") {
                extras[i - 6].values.emplace_back(std::nullopt);
                continue;
            }
            const auto v = parse_double(f);
            if (!v || !std::isfinite(*v)) {
                throw ParseError("malformed value '" + std::string(f) + "' in column '" + extras[i - 6].name + "'",
                                 line_no);
            }
            extras[i - 6].values.emplace_back(*v);
        }
        candles.push_back(c);
        source_lines.push_back(line_no);
    }

    // Duplicate detection here so that the error can cite both source lines.
    std::vector<std::size_t> order(candles.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return candles[a].timestamp < candles[b].timestamp; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (candles[order[i]].timestamp == candles[order[i - 1]].timestamp) {
            throw ParseError("duplicate timestamp " + format_iso8601(candles[order[i]].timestamp) + " (also on " +
                                 describe(source_lines[order[i - 1]]) + ")",
                             source_lines[order[i]]);
        }
    }
    return assemble_series(format.symbol, std::move(candles), std::move(extras));
}

CandleSeries load_candles(const std::string& path, const CandleFileFormat& format) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open candle file '" + path + "'");
    }
    try {
        return parse_candles(in, format);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.line());
    }
}

void write_candles(std::ostream& out, const CandleSeries& series, TimestampFormat timestamps) {
    out << "timestamp,open,high,low,close,volume";
    for (const auto& col : series.extra_columns) {
        out << ',' << col.name;
    }
    out << '\n';
    for (std::size_t i = 0; i < series.candles.size(); ++i) {
        const auto& c = series.candles[i];
        if (timestamps == TimestampFormat::iso8601) {
            out << format_iso8601(c.timestamp);
        } else {
            out << to_unix(c.timestamp);
        }
        out << ',' << format_double(c.open) << ',' << format_double(c.high) << ',' << format_double(c.low) << ','
            << format_double(c.close) << ',' << format_double(c.volume);
        for (const auto& col : series.extra_columns) {
            out << ',';
            if (col.values[i]) {
                out << format_double(*col.values[i]);
            }
        }
        out << '\n';
    }
}

RepairResult validate_and_repair(const CandleSeries& series, const GapPolicy& policy) {
    if (series.interval != kHour) {
        throw ValidationError("only 1-hour candles are supported");
    }
    RepairResult result;
    result.series.symbol = series.symbol;
    result.series.interval = series.interval;
    for (const auto& col : series.extra_columns) {
        result.series.extra_columns.push_back({col.name, {}});
    }
    auto& out = result.series;

    for (std::size_t i = 0; i < series.candles.size(); ++i) {
        const Candle& c = series.candles[i];
        const std::string when = format_iso8601(c.timestamp);
        if (!(c.open > 0 && c.high > 0 && c.low > 0 && c.close > 0)) {
            throw ValidationError("non-positive price at " + when);
        }
        if (!(c.volume >= 0)) {
            throw ValidationError("negative volume at " + when);
        }
        if (!(c.low <= c.high) || c.low > std::min(c.open, c.close) || c.high < std::max(c.open, c.close)) {
            throw ValidationError("candle at " + when + " violates low <= open,close <= high");
        }
        if (!is_hour_aligned(c.timestamp)) {
            throw ValidationError("timestamp " + when + " is not aligned to the hour");
        }
        if (!out.candles.empty()) {
            const Timestamp prev = out.candles.back().timestamp;
            if (c.timestamp <= prev) {
                throw ValidationError("timestamps not strictly increasing at " + when);
            }
            const auto missing = (c.timestamp - prev) / kHour - 1;
            if (missing > 0) {
                if (policy.action == GapAction::reject || missing > policy.max_fill_hours) {
                    throw ValidationError("gap of " + std::to_string(missing) + " missing hour(s) before " + when +
                                          " exceeds the repair policy");
                }
                const double fill = out.candles.back().close;
                for (long k = 1; k <= missing; ++k) {
                    const Timestamp ts = prev + k * kHour;
                    out.candles.push_back({ts, fill, fill, fill, fill, 0.0});
                    for (auto& col : out.extra_columns) {
                        col.values.push_back(col.values.back());
                    }
                    result.report.push_back({ts, "forward_fill"});
                }
            }
        }
        out.candles.push_back(c);
        for (std::size_t k = 0; k < series.extra_columns.size(); ++k) {
            out.extra_columns[k].values.push_back(series.extra_columns[k].values.at(i));
        }
    }
    return result;
}

nlohmann::json repair_report_json(const std::vector<RepairEntry>& report) {
    auto list = nlohmann::json::array();
    for (const auto& entry : report) {
        list.push_back({{"timestamp", format_iso8601(entry.timestamp)}, {"action", entry.action}});
    }
    return list;
}

std::string to_string(ResponseMode mode) { return mode == ResponseMode::paper ? "paper" : "plain_log"; }

ResponseMode response_mode_from_string(const std::string& text) {
    if (text == "paper") {
        return ResponseMode::paper;
    }
    if (text == "plain_log") {
        return ResponseMode::plain_log;
    }
    throw ConfigError("unknown response mode '" + text + "' (expected paper or plain_log)");
}

double response_between(double from_price, double to_price, ResponseMode mode) {
    const double from_log = std::log(from_price);
    const double to_log = std::log(to_price);
    if (mode == ResponseMode::plain_log) {
        return to_log - from_log;
    }
    if (!(from_price > 1.0)) {
        throw DomainError("price " + format_double(from_price) +
                          " <= 1 makes the response denominator log(P) non-positive; use response = plain_log");
    }
    return (to_log - from_log) / from_log;
}

ReturnSeries compute_response(const CandleSeries& series, ResponseMode mode) {
    ReturnSeries out;
    if (series.candles.size() < 2) {
        return out;
    }
    if (mode == ResponseMode::paper) {
        for (const auto& c : series.candles) {
            if (!(c.close > 1.0)) {
                throw DomainError("close " + format_double(c.close) + " at " + format_iso8601(c.timestamp) +
                                  " is <= 1; response = \"paper\" divides by log(P). Use response = plain_log");
            }
        }
    }
    out.timestamps.reserve(series.candles.size() - 1);
    out.values.reserve(series.candles.size() - 1);
    for (std::size_t i = 1; i < series.candles.size(); ++i) {
        out.timestamps.push_back(series.candles[i].timestamp);
        out.values.push_back(response_between(series.candles[i - 1].close, series.candles[i].close, mode));
    }
    return out;
}

}  // namespace cwf
