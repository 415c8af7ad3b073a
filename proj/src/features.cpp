#include "cwf/features.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>

#include "cwf/error.hpp"
#include "cwf/format.hpp"
#include "cwf/indicators.hpp"

namespace cwf {

namespace {

std::size_t parse_parameter(const std::string& text, const std::string& value) {
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || out == 0) {
        throw ConfigError("feature '" + text + "' needs a positive integer parameter");
    }
    return out;
}

struct Column {
    std::string name;
    IndicatorSeries values;
};

IndicatorSeries k_bar_response(std::span<const double> closes, std::size_t k, ResponseMode mode) {
    IndicatorSeries out{std::vector<double>(closes.size(), kUndefined), k};
    for (std::size_t t = k; t < closes.size(); ++t) {
        out.values[t] = response_between(closes[t - k], closes[t], mode);
    }
    return out;
}

}  // namespace

void IndicatorConfig::validate() const {
    if (bollinger_window < 2) {
        throw ConfigError("bollinger_window must be >= 2");
    }
    if (macd_fast < 1 || macd_slow < 1 || macd_signal < 1 || rsi_window < 1) {
        throw ConfigError("indicator windows must be >= 1");
    }
    if (macd_fast >= macd_slow) {
        throw ConfigError("macd_fast must be smaller than macd_slow");
    }
}

FeatureSpec FeatureSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string tail = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
    auto plain = [&](FeatureKind kind) {
        if (colon != std::string::npos) {
            throw ConfigError("feature '" + head + "' takes no parameter");
        }
        return FeatureSpec{kind, 0, {}};
    };
    if (head == "pct_b") return plain(FeatureKind::percent_b);
    if (head == "bandwidth") return plain(FeatureKind::bandwidth);
    if (head == "macd") return plain(FeatureKind::macd_line);
    if (head == "macd_signal") return plain(FeatureKind::macd_signal);
    if (head == "macd_hist") return plain(FeatureKind::macd_histogram);
    if (head == "rsi_first") return plain(FeatureKind::rsi_first);
    if (head == "rsi_smoothed") return plain(FeatureKind::rsi_smoothed);
    if (head == "volume_z") return plain(FeatureKind::volume_z);
    if (head == "extras") return plain(FeatureKind::all_extras);
    if (head == "ret") return {FeatureKind::response, parse_parameter(text, tail), {}};
    if (head == "sma") return {FeatureKind::sma, parse_parameter(text, tail), {}};
    if (head == "ema") return {FeatureKind::ema, parse_parameter(text, tail), {}};
    if (head == "extra") {
        if (tail.empty()) {
            throw ConfigError("feature 'extra' needs a column name");
        }
        return {FeatureKind::extra, 0, tail};
    }
    throw ConfigError("unknown feature '" + text + "'");
}

std::string FeatureSpec::to_string() const {
    switch (kind) {
        case FeatureKind::percent_b: return "pct_b";
        case FeatureKind::bandwidth: return "bandwidth";
        case FeatureKind::macd_line: return "macd";
        case FeatureKind::macd_signal: return "macd_signal";
        case FeatureKind::macd_histogram: return "macd_hist";
        case FeatureKind::rsi_first: return "rsi_first";
        case FeatureKind::rsi_smoothed: return "rsi_smoothed";
        case FeatureKind::response: return "ret:" + std::to_string(parameter);
        case FeatureKind::sma: return "sma:" + std::to_string(parameter);
        case FeatureKind::ema: return "ema:" + std::to_string(parameter);
        case FeatureKind::volume_z: return "volume_z";
        case FeatureKind::extra: return "extra:" + column;
        case FeatureKind::all_extras: return "extras";
    }
    return {};
}

std::vector<FeatureSpec> default_feature_selection() {
    std::vector<FeatureSpec> out = {
        {FeatureKind::percent_b, 0, {}},   {FeatureKind::bandwidth, 0, {}},    {FeatureKind::macd_line, 0, {}},
        {FeatureKind::macd_signal, 0, {}}, {FeatureKind::macd_histogram, 0, {}}, {FeatureKind::rsi_first, 0, {}},
        {FeatureKind::rsi_smoothed, 0, {}},
    };
    for (std::size_t k : {1, 2, 3, 6, 12, 24}) {
        out.push_back({FeatureKind::response, k, {}});
    }
    out.push_back({FeatureKind::volume_z, 0, {}});
    out.push_back({FeatureKind::all_extras, 0, {}});
    return out;
}

FeatureMatrix build_feature_matrix(const CandleSeries& series, const IndicatorConfig& config,
                                   std::span<const FeatureSpec> selection) {
    config.validate();
    if (selection.empty()) {
        throw ConfigError("feature selection is empty");
    }
    const std::vector<double> closes = series.closes();
    const std::size_t size = closes.size();
    if (size == 0) {
        throw ValidationError("cannot build features from an empty series");
    }

    // Indicators are evaluated lazily and shared between the columns that use them.
    std::optional<BollingerSeries> boll;
    std::optional<MacdSeries> mac;
    std::optional<RsiSeries> rs;
    auto need_length = [&](std::size_t n, const std::string& what) {
        if (size < n) {
            throw ValidationError("series of " + std::to_string(size) + " bars is too short for " + what);
        }
    };
    auto bollinger_series = [&]() -> const BollingerSeries& {
        if (!boll) {
            need_length(config.bollinger_window, "the Bollinger window");
            boll = bollinger(closes, config.bollinger_window);
        }
        return *boll;
    };
    auto macd_series = [&]() -> const MacdSeries& {
        if (!mac) {
            mac = macd(closes, config.macd_fast, config.macd_slow, config.macd_signal);
        }
        return *mac;
    };
    auto rsi_series = [&]() -> const RsiSeries& {
        if (!rs) {
            need_length(config.rsi_window + 1, "the RSI window");
            rs = rsi(closes, config.rsi_window);
        }
        return *rs;
    };

    std::vector<Column> columns;
    auto add_extra = [&](const ExtraColumn& extra) {
        IndicatorSeries values{std::vector<double>(size, kUndefined), size};
        bool seen = false;
        for (std::size_t i = 0; i < size; ++i) {
            if (extra.values[i]) {
                if (!seen) {
                    values.warmup = i;
                    seen = true;
                }
                values.values[i] = *extra.values[i];
            } else if (seen) {
                throw ValidationError("extra column '" + extra.name + "' is missing a value at " +
                                      format_iso8601(series.candles[i].timestamp));
            }
        }
        columns.push_back({extra.name, std::move(values)});
    };

    for (const auto& spec : selection) {
        switch (spec.kind) {
            case FeatureKind::percent_b: columns.push_back({"pct_b", bollinger_series().percent_b}); break;
            case FeatureKind::bandwidth: columns.push_back({"bandwidth", bollinger_series().bandwidth}); break;
            case FeatureKind::macd_line: columns.push_back({"macd", macd_series().line}); break;
            case FeatureKind::macd_signal: columns.push_back({"macd_signal", macd_series().signal}); break;
            case FeatureKind::macd_histogram: columns.push_back({"macd_hist", macd_series().histogram}); break;
            case FeatureKind::rsi_first: columns.push_back({"rsi_first", rsi_series().first}); break;
            case FeatureKind::rsi_smoothed: columns.push_back({"rsi_smoothed", rsi_series().smoothed}); break;
            case FeatureKind::response:
                need_length(spec.parameter + 1, "ret_" + std::to_string(spec.parameter));
                columns.push_back({"ret_" + std::to_string(spec.parameter),
                                   k_bar_response(closes, spec.parameter, config.response_mode)});
                break;
            case FeatureKind::sma:
                need_length(spec.parameter, "sma_" + std::to_string(spec.parameter));
                columns.push_back({"sma_" + std::to_string(spec.parameter), sma(closes, spec.parameter)});
                break;
            case FeatureKind::ema:
                columns.push_back({"ema_" + std::to_string(spec.parameter), ema(closes, spec.parameter)});
                break;
            case FeatureKind::volume_z: {
                need_length(config.bollinger_window, "volume_z");
                const auto volumes = series.volumes();
                columns.push_back({"volume_z", rolling_zscore(volumes, config.bollinger_window)});
                break;
            }
            case FeatureKind::extra: {
                const ExtraColumn* extra = series.find_extra(spec.column);
                if (extra == nullptr) {
                    throw ConfigError("series has no extra column '" + spec.column + "'");
                }
                add_extra(*extra);
                break;
            }
            case FeatureKind::all_extras:
                for (const auto& extra : series.extra_columns) {
                    add_extra(extra);
                }
                break;
        }
    }
    if (columns.empty()) {
        throw ConfigError("feature selection produced no columns");
    }

    std::set<std::string> seen_names;
    std::size_t warmup = 0;
    for (const auto& col : columns) {
        if (!seen_names.insert(col.name).second) {
            throw ConfigError("feature '" + col.name + "' selected more than once");
        }
        warmup = std::max(warmup, col.values.warmup);
    }
    if (warmup >= size) {
        throw ValidationError("series of " + std::to_string(size) + " bars is shorter than the feature warmup of " +
                              std::to_string(warmup) + " bars");
    }

    FeatureMatrix out;
    out.warmup_dropped = warmup;
    for (const auto& col : columns) {
        out.feature_names.push_back(col.name);
    }
    out.rows = Matrix(size - warmup, columns.size());
    for (std::size_t i = warmup; i < size; ++i) {
        out.timestamps.push_back(series.candles[i].timestamp);
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const double v = columns[c].values.values[i];
            if (!std::isfinite(v)) {
                throw DomainError("feature '" + columns[c].name + "' is not finite at " +
                                  format_iso8601(series.candles[i].timestamp));
            }
            out.rows(i - warmup, c) = v;
        }
    }
    return out;
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& features) {
    out << "timestamp";
    for (const auto& name : features.feature_names) {
        out << ',' << name;
    }
    out << '\n';
    for (std::size_t i = 0; i < features.size(); ++i) {
        out << format_iso8601(features.timestamps[i]);
        for (double v : features.rows.row(i)) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

FeatureMatrix read_feature_matrix(std::istream& in) {
    FeatureMatrix out;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError("missing feature header", 1);
    }
    ++line_no;
    const auto header = split_fields(line);
    if (header.empty() || header[0] != "timestamp") {
        throw ParseError("feature file must start with a timestamp column", line_no);
    }
    for (std::size_t i = 1; i < header.size(); ++i) {
        out.feature_names.emplace_back(header[i]);
    }
    out.rows = Matrix(0, out.feature_names.size());
    std::vector<double> row(out.feature_names.size());
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError("wrong field count", line_no);
        }
        const auto ts = parse_iso8601(fields[0]);
        if (!ts) {
            throw ParseError("malformed timestamp", line_no);
        }
        for (std::size_t i = 1; i < fields.size(); ++i) {
            const auto v = parse_double(fields[i]);
            if (!v) {
                throw ParseError("malformed value '" + std::string(fields[i]) + "'", line_no);
            }
            row[i - 1] = *v;
        }
        out.timestamps.push_back(*ts);
        out.rows.append_row(row);
    }
    return out;
}

}  // namespace cwf
