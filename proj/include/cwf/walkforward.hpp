#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cwf/features.hpp"
#include "cwf/labeling.hpp"
#include "cwf/svm.hpp"
#include "cwf/time.hpp"

namespace cwf {

struct Epoch {
    Timestamp train_start{};
    Timestamp train_end{};
    Timestamp predict_start{};
    Timestamp predict_end{};

    bool operator==(const Epoch&) const = default;
};

struct ScheduleConfig {
    int window_months = 9;
    int retrain_months = 1;
    unsigned anchor_day = 5;
};

struct RetrainSchedule {
    std::vector<Epoch> epochs;
    ScheduleConfig config;
};

// Epochs over data in [data_start, data_end). The first prediction month opens on
// the first anchor boundary at or after data_start + window; each epoch trains on
// the `window_months` before it; the last one is truncated at data_end.
RetrainSchedule make_schedule(Timestamp data_start, Timestamp data_end, const ScheduleConfig& config = {});

struct PredictionStream {
    std::vector<Prediction> predictions;
    std::vector<std::size_t> epoch_of;                   // per prediction
    std::vector<std::shared_ptr<const SvmModel>> models;  // per epoch; null when skipped

    std::size_t size() const noexcept { return predictions.size(); }
};

struct WalkForwardConfig {
    std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0};
    std::optional<double> fixed_c;  // bypasses validation when set
    double validation_fraction = 0.2;
    double gamma = 0.0;
    SolverOptions solver;
    std::size_t jobs = 1;  // epochs trained concurrently
};

struct EpochReport {
    Epoch epoch;
    bool trained = false;
    std::string note;
    std::size_t training_rows = 0;
    ClassCounts class_counts{};
    double chosen_c = 0.0;
    std::vector<CandidateScore> candidates;
    bool converged = false;
    std::size_t predictions = 0;
};

struct WalkForwardResult {
    PredictionStream stream;
    std::vector<EpochReport> epochs;
};

// Per epoch: trains on labeled rows with timestamp >= train_start whose label is
// realised strictly before train_end, then scores every feature row in
// [predict_start, predict_end). An epoch whose window lacks a class emits
// non-actionable, model-less predictions and is reported as skipped.
WalkForwardResult run_walkforward(const LabeledDataset& dataset, const FeatureMatrix& features,
                                  const RetrainSchedule& schedule, const WalkForwardConfig& config);

// Re-thresholds every prediction at a new gamma (scores unchanged).
PredictionStream apply_gamma(const PredictionStream& stream, double gamma);

// `timestamp,d_c1,d_c2,d_c3,argmax,actionable`. Model-less bars carry nan scores.
void write_prediction_stream(std::ostream& out, const PredictionStream& stream);
PredictionStream read_prediction_stream(std::istream& in);

nlohmann::json epoch_reports_json(const std::vector<EpochReport>& epochs);

}  // namespace cwf
