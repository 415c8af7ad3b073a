#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cwf/backtest.hpp"
#include "cwf/features.hpp"
#include "cwf/fetch.hpp"
#include "cwf/market_data.hpp"
#include "cwf/walkforward.hpp"

namespace cwf {

// Minimal TOML subset: [section] / [a.b] headers, `key = value` with strings,
// numbers, booleans and (possibly multi-line) arrays of those. `#` comments.
struct TomlValue {
    enum class Type { boolean, number, string, array };
    Type type = Type::number;
    bool boolean = false;
    double number = 0.0;
    std::string string;
    std::vector<TomlValue> array;
};

// Keys are fully qualified ("section.key").
using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text);
TomlValue parse_toml_value(const std::string& text);

struct DataConfig {
    std::string symbol = "BTCUSD";
    std::string source = "file";  // file | coinbase | synthetic
    std::string path;
    // Optional symbol -> file map; each symbol is run into <output_dir>/<symbol>.
    std::map<std::string, std::string> paths;
    GapPolicy repair;
    // coinbase
    EndpointConfig endpoint;
    std::string start;  // ISO-8601
    std::string end;
    // synthetic
    std::size_t synthetic_hours = 24 * 365 * 2;
    double synthetic_noise = 0.1;
    std::string synthetic_start = "2018-01-03T00:00:00Z";
};

struct ReportConfig {
    std::vector<double> gamma_grid;  // empty means 0, 0.1, ..., 1.0
    std::size_t volatility_window = 168;
    std::size_t acf_lags = 50;
    int proportion_months = 9;
    std::string activity_period = "month";
    bool plots = true;
};

struct SweepConfig {
    std::vector<double> gammas;
    std::vector<double> cs;  // empty means validation-selected C
};

struct RunConfig {
    DataConfig data;
    double threshold = kDefaultClassThreshold;
    IndicatorConfig indicators;
    std::vector<FeatureSpec> features = default_feature_selection();
    ScheduleConfig schedule;
    WalkForwardConfig walkforward;
    StrategyConfig strategy;
    ReportConfig report;
    SweepConfig sweep;
    std::string output_dir = "out";
    std::size_t jobs = 1;
    std::uint64_t seed = 1;

    // Range checks for every field; throws ConfigError.
    void validate() const;
};

// Unknown keys are rejected so that typos do not silently fall back to defaults.
RunConfig config_from_toml(const TomlTable& table);
RunConfig load_config(const std::string& path);

// `section.key=value` override, value in TOML syntax (bare words are taken as strings).
void apply_override(TomlTable& table, const std::string& assignment);

// Canonical text of the effective configuration; parsing it back yields the same RunConfig.
std::string config_to_toml(const RunConfig& config);

}  // namespace cwf
