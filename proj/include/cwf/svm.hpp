#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cwf/labeling.hpp"
#include "cwf/matrix.hpp"
#include "cwf/time.hpp"

namespace cwf {

// Per-feature z-scoring learned on training rows. Constant columns are dropped
// and their names recorded.
struct Standardizer {
    std::vector<std::string> input_names;
    std::vector<std::size_t> kept;  // indices into the input row
    std::vector<double> mean;       // per kept column
    std::vector<double> stddev;     // per kept column, population convention
    std::vector<std::string> dropped;

    std::size_t input_width() const noexcept { return input_names.size(); }
    std::size_t output_width() const noexcept { return kept.size(); }

    bool operator==(const Standardizer&) const = default;
};

Standardizer fit_standardizer(const Matrix& rows, std::span<const std::string> names);
std::vector<double> apply_standardizer(const Standardizer& standardizer, std::span<const double> row);
Matrix apply_standardizer(const Standardizer& standardizer, const Matrix& rows);

// Linear decision function y(x) = w.x + bias on standardized features.
struct BinarySvm {
    std::vector<double> weights;
    double bias = 0.0;
    double c = 1.0;
    bool converged = false;

    double decision(std::span<const double> x) const;

    bool operator==(const BinarySvm&) const = default;
};

struct SolverOptions {
    std::size_t max_iterations = 5000;
    double gradient_tolerance = 1e-6;  // stop when |grad| <= tol * (1 + |w|)
    std::size_t memory = 10;           // L-BFGS correction pairs
    bool record_objective = false;
};

struct SolverReport {
    std::size_t iterations = 0;
    double objective = 0.0;
    double gradient_norm = 0.0;
    bool converged = false;
    std::vector<double> objective_trace;  // objective after each accepted step, when recorded
};

struct BinaryTrainResult {
    BinarySvm machine;
    SolverReport report;
};

// F(w, b) = 1/2 |w|^2 + C sum_i s_i max(0, 1 - t_i (w.x_i + b))^2
double squared_hinge_objective(const Matrix& x, std::span<const int> targets, std::span<const double> weights,
                               double c, std::span<const double> w, double bias);

// Returns F and writes dF/dw into grad_w and dF/db into grad_bias.
double squared_hinge_gradient(const Matrix& x, std::span<const int> targets, std::span<const double> weights,
                              double c, std::span<const double> w, double bias, std::span<double> grad_w,
                              double& grad_bias);

// Minimizes F from w = 0, b = 0 with full-batch L-BFGS and Armijo backtracking.
// Targets are +1/-1; both must be present. The final iterate is returned even
// when the iteration cap is hit, with converged = false.
BinaryTrainResult train_binary(const Matrix& x, std::span<const int> targets, std::span<const double> weights,
                               double c, const SolverOptions& options = {});

struct TrainingWindow {
    Timestamp start{};            // first training row
    Timestamp end{};              // one hour past the last training row
    Timestamp last_label_time{};  // latest instant any training label depends on
    std::size_t rows = 0;
    ClassCounts class_counts{};

    bool operator==(const TrainingWindow&) const = default;
};

// One-vs-rest machines indexed by ClassLabel, sharing one standardizer.
struct SvmModel {
    Standardizer standardizer;
    std::array<BinarySvm, kClassCount> machines;
    ClassWeights class_weights{};
    TrainingWindow window;

    bool converged() const;

    bool operator==(const SvmModel&) const = default;
};

using Scores = std::array<double, kClassCount>;

// Sample weight of a row is the inverse-frequency weight of its true class, for all three machines.
SvmModel train_multiclass(const LabeledDataset& dataset, double c, const SolverOptions& options = {});

// Raw decision values y_k(x); not probabilities. `row` has the model's input (pre-drop) width.
Scores decision_scores(const SvmModel& model, std::span<const double> row);

struct Prediction {
    Timestamp timestamp{};
    Scores scores{};
    ClassLabel argmax = ClassLabel::same;
    bool actionable = false;
    double gamma = 0.0;
    bool has_model = true;  // false in epochs that could not be trained

    bool operator==(const Prediction&) const = default;
};

// Largest score wins, ties to the lower class index.
ClassLabel argmax_class(const Scores& scores);

// actionable iff argmax is up or down and its score >= gamma.
Prediction predict_with_gamma(const Scores& scores, double gamma, Timestamp timestamp = {});

double balanced_accuracy(std::span<const ClassLabel> predicted, std::span<const ClassLabel> actual);

struct CandidateScore {
    double c = 0.0;
    double balanced_accuracy = 0.0;
};

struct ModelSelection {
    SvmModel model;
    double chosen_c = 0.0;
    std::vector<CandidateScore> candidates;
    std::string note;  // why validation was skipped, if it was
};

// Picks C on a time-ordered split (the last `validation_fraction` of rows
// validate) by balanced accuracy, then refits on all rows with that C.
ModelSelection train_with_validation(const LabeledDataset& dataset, std::span<const double> c_grid,
                                     double validation_fraction = 0.2, const SolverOptions& options = {});

inline constexpr int kModelSnapshotVersion = 1;

nlohmann::json model_to_json(const SvmModel& model);
SvmModel model_from_json(const nlohmann::json& doc);

}  // namespace cwf
