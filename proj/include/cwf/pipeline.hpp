#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cwf/backtest.hpp"
#include "cwf/config.hpp"
#include "cwf/features.hpp"
#include "cwf/labeling.hpp"
#include "cwf/market_data.hpp"
#include "cwf/walkforward.hpp"

namespace cwf {

// One config per symbol. A [data.paths] table expands into one run per entry,
// each writing into <output_dir>/<symbol>; otherwise the config is returned as is.
std::vector<RunConfig> expand_symbols(const RunConfig& config);

struct PreparedData {
    CandleSeries series;
    std::vector<RepairEntry> repairs;
    FeatureMatrix features;
    ReturnSeries responses;
    LabeledDataset labeled;
};

// Loads, fetches or generates the candles and runs validate_and_repair.
RepairResult acquire_series(const RunConfig& config);

// Candles, features, responses and labels. With a cache directory, candles and
// features are stored under a key derived from the data and feature settings
// (and the input file contents); `audit.log` in that directory records whether
// each request was computed or served from the cache.
PreparedData prepare_data(const RunConfig& config, const std::optional<std::filesystem::path>& cache_dir = {});

// Writes a set of files into a staging directory next to the target and moves
// them into place on commit. Without a commit the staging directory is deleted,
// so a failed command leaves no partial reports behind.
class OutputStage {
public:
    explicit OutputStage(std::filesystem::path target);
    ~OutputStage();
    OutputStage(const OutputStage&) = delete;
    OutputStage& operator=(const OutputStage&) = delete;

    void write(const std::string& relative, const std::string& content);
    std::filesystem::path staging() const { return staging_; }
    // Checks that every written file is present and non-empty, then moves them.
    void commit();

private:
    std::filesystem::path target_;
    std::filesystem::path staging_;
    std::vector<std::string> files_;
    bool committed_ = false;
};

struct PipelineRun {
    PreparedData data;
    RetrainSchedule schedule;
    WalkForwardResult walkforward;  // empty when predictions were supplied externally
    BacktestResult backtest;
    MonthlySummary summary;
};

// Walk-forward (or the supplied prediction stream) followed by the backtest.
PipelineRun run_pipeline(const RunConfig& config, const std::optional<std::string>& predictions_path = {},
                         const std::optional<std::filesystem::path>& cache_dir = {});

// Command entry points; each writes into config.output_dir (per symbol when expanded).
void cmd_ingest(const RunConfig& config);
void cmd_features(const RunConfig& config);
void cmd_backtest(const RunConfig& config, const std::optional<std::string>& predictions_path = {});
void cmd_sweep(const RunConfig& config);
void cmd_report(const RunConfig& config);

}  // namespace cwf
