#include "cwf/svm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <future>
#include <numeric>

#include "cwf/error.hpp"
#include "cwf/format.hpp"

namespace cwf {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void check_problem(const Matrix& x, std::span<const int> targets, std::span<const double> weights, double c) {
    if (targets.size() != x.rows() || weights.size() != x.rows()) {
        throw std::invalid_argument("targets and weights must have one entry per row");
    }
    if (!(c > 0.0)) {
        throw std::invalid_argument("C must be positive");
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] != 1 && targets[i] != -1) {
            throw std::invalid_argument("targets must be +1 or -1");
        }
        if (!(weights[i] > 0.0)) {
            throw std::invalid_argument("sample weights must be positive");
        }
    }
}

// The optimization variable is theta = (w, bias) of length d + 1.
class SquaredHingeProblem {
public:
    SquaredHingeProblem(const Matrix& x, std::span<const int> targets, std::span<const double> weights, double c)
        : x_(x), targets_(targets), weights_(weights), c_(c), d_(x.cols()), margins_(x.rows()) {}

    std::size_t dimension() const { return d_ + 1; }

    // Objective and gradient at theta; caches y_i = w.x_i + b for the line search.
    double evaluate(std::span<const double> theta, std::span<double> grad) {
        const auto w = theta.first(d_);
        const double bias = theta[d_];
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < x_.rows(); ++i) {
            const auto xi = x_.row(i);
            margins_[i] = dot(w, xi) + bias;
            const double slack = 1.0 - targets_[i] * margins_[i];
            if (slack > 0.0) {
                const double sw = weights_[i] * slack;
                loss += sw * slack;
                const double coef = -2.0 * c_ * sw * targets_[i];
                for (std::size_t j = 0; j < d_; ++j) {
                    grad[j] += coef * xi[j];
                }
                grad[d_] += coef;
            }
        }
        for (std::size_t j = 0; j < d_; ++j) {
            grad[j] += w[j];
        }
        return 0.5 * dot(w, w) + c_ * loss;
    }

    // Direction-specific data for evaluating F(theta + a p) - F(theta).
    void prepare_direction(std::span<const double> theta, std::span<const double> p) {
        const auto w = theta.first(d_);
        const auto pw = p.first(d_);
        w_dot_p_ = dot(w, pw);
        p_sq_ = dot(pw, pw);
        direction_margins_.resize(x_.rows());
        for (std::size_t i = 0; i < x_.rows(); ++i) {
            direction_margins_[i] = dot(pw, x_.row(i)) + p[d_];
        }
    }

    // Objective change along the prepared direction, computed term by term so
    // that tiny decreases near the optimum are not lost to cancellation.
    double change_along(double step) const {
        double delta = step * w_dot_p_ + 0.5 * step * step * p_sq_;
        double loss_delta = 0.0;
        for (std::size_t i = 0; i < x_.rows(); ++i) {
            const double t = targets_[i];
            const double before = std::max(0.0, 1.0 - t * margins_[i]);
            const double after = std::max(0.0, 1.0 - t * (margins_[i] + step * direction_margins_[i]));
            if (before == 0.0 && after == 0.0) {
                continue;
            }
            const double diff = (before > 0.0 && after > 0.0) ? -step * t * direction_margins_[i] : after - before;
            loss_delta += weights_[i] * diff * (after + before);
        }
        return delta + c_ * loss_delta;
    }

private:
    const Matrix& x_;
    std::span<const int> targets_;
    std::span<const double> weights_;
    double c_;
    std::size_t d_;
    std::vector<double> margins_;
    std::vector<double> direction_margins_;
    double w_dot_p_ = 0.0;
    double p_sq_ = 0.0;
};

}  // namespace

// ---------------------------------------------------------------------------
// Standardizer

Standardizer fit_standardizer(const Matrix& rows, std::span<const std::string> names) {
    if (rows.rows() < 2) {
        throw ValidationError("standardizer needs at least 2 rows");
    }
    if (names.size() != rows.cols()) {
        throw std::invalid_argument("feature names do not match the row width");
    }
    Standardizer out;
    out.input_names.assign(names.begin(), names.end());
    const double n = static_cast<double>(rows.rows());
    for (std::size_t j = 0; j < rows.cols(); ++j) {
        bool constant = true;
        double sum = 0.0;
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            sum += rows(i, j);
            constant = constant && rows(i, j) == rows(0, j);
        }
        const double mean = sum / n;
        double m2 = 0.0;
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            const double d = rows(i, j) - mean;
            m2 += d * d;
        }
        const double sd = std::sqrt(m2 / n);
        if (constant || !(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            out.dropped.push_back(out.input_names[j]);
            continue;
        }
        out.kept.push_back(j);
        out.mean.push_back(mean);
        out.stddev.push_back(sd);
    }
    return out;
}

std::vector<double> apply_standardizer(const Standardizer& standardizer, std::span<const double> row) {
    if (row.size() != standardizer.input_width()) {
        throw std::invalid_argument("row has " + std::to_string(row.size()) + " features, model expects " +
                                    std::to_string(standardizer.input_width()));
    }
    std::vector<double> out(standardizer.output_width());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = (row[standardizer.kept[k]] - standardizer.mean[k]) / standardizer.stddev[k];
    }
    return out;
}

Matrix apply_standardizer(const Standardizer& standardizer, const Matrix& rows) {
    Matrix out(rows.rows(), standardizer.output_width());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        const auto z = apply_standardizer(standardizer, rows.row(i));
        std::copy(z.begin(), z.end(), out.row(i).begin());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Binary machine

double BinarySvm::decision(std::span<const double> x) const { return dot(weights, x) + bias; }

double squared_hinge_objective(const Matrix& x, std::span<const int> targets, std::span<const double> weights,
                               double c, std::span<const double> w, double bias) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double slack = std::max(0.0, 1.0 - targets[i] * (dot(w, x.row(i)) + bias));
        loss += weights[i] * slack * slack;
    }
    return 0.5 * dot(w, w) + c * loss;
}

double squared_hinge_gradient(const Matrix& x, std::span<const int> targets, std::span<const double> weights,
                              double c, std::span<const double> w, double bias, std::span<double> grad_w,
                              double& grad_bias) {
    check_problem(x, targets, weights, c);
    SquaredHingeProblem problem(x, targets, weights, c);
    std::vector<double> theta(w.begin(), w.end());
    theta.push_back(bias);
    std::vector<double> grad(theta.size());
    const double f = problem.evaluate(theta, grad);
    std::copy(grad.begin(), grad.end() - 1, grad_w.begin());
    grad_bias = grad.back();
    return f;
}

BinaryTrainResult train_binary(const Matrix& x, std::span<const int> targets, std::span<const double> weights,
                               double c, const SolverOptions& options) {
    check_problem(x, targets, weights, c);
    const bool has_pos = std::find(targets.begin(), targets.end(), 1) != targets.end();
    const bool has_neg = std::find(targets.begin(), targets.end(), -1) != targets.end();
    if (!has_pos || !has_neg) {
        throw ValidationError("binary training needs both +1 and -1 targets");
    }

    SquaredHingeProblem problem(x, targets, weights, c);
    const std::size_t p = problem.dimension();
    const std::size_t d = p - 1;
    std::vector<double> theta(p, 0.0), grad(p), next(p), next_grad(p), dir(p), alpha_buf(options.memory);
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;

    SolverReport report;
    double f = problem.evaluate(theta, grad);
    if (options.record_objective) {
        report.objective_trace.push_back(f);
    }
    auto grad_ok = [&](std::span<const double> g, std::span<const double> th) {
        return norm(g) <= options.gradient_tolerance * (1.0 + norm(th.first(d)));
    };

    bool converged = grad_ok(grad, theta);
    std::size_t iter = 0;
    while (!converged && iter < options.max_iterations) {
        // Two-loop recursion: dir = -H grad.
        std::copy(grad.begin(), grad.end(), dir.begin());
        const std::size_t m = s_hist.size();
        for (std::size_t k = m; k-- > 0;) {
            alpha_buf[k] = rho_hist[k] * dot(s_hist[k], dir);
            for (std::size_t j = 0; j < p; ++j) {
                dir[j] -= alpha_buf[k] * y_hist[k][j];
            }
        }
        if (m > 0) {
            const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (double& v : dir) {
                v *= gamma;
            }
        } else {
            const double scale = 1.0 / std::max(1.0, norm(grad));
            for (double& v : dir) {
                v *= scale;
            }
        }
        for (std::size_t k = 0; k < m; ++k) {
            const double beta = rho_hist[k] * dot(y_hist[k], dir);
            for (std::size_t j = 0; j < p; ++j) {
                dir[j] += (alpha_buf[k] - beta) * s_hist[k][j];
            }
        }
        for (double& v : dir) {
            v = -v;
        }
        double slope = dot(grad, dir);
        if (!(slope < 0.0)) {
            // Curvature history went stale; restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            const double scale = 1.0 / std::max(1.0, norm(grad));
            for (std::size_t j = 0; j < p; ++j) {
                dir[j] = -grad[j] * scale;
            }
            slope = dot(grad, dir);
        }

        problem.prepare_direction(theta, dir);
        double step = 1.0;
        bool accepted = false;
        for (int trial = 0; trial < 60; ++trial) {
            const double change = problem.change_along(step);
            if (change <= 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;
        }

        for (std::size_t j = 0; j < p; ++j) {
            next[j] = theta[j] + step * dir[j];
        }
        const double next_f = problem.evaluate(next, next_grad);
        std::vector<double> s(p), y(p);
        for (std::size_t j = 0; j < p; ++j) {
            s[j] = next[j] - theta[j];
            y[j] = next_grad[j] - grad[j];
        }
        const double sy = dot(s, y);
        if (options.memory > 0 && sy > 1e-12 * norm(s) * norm(y)) {
            if (s_hist.size() == options.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }
        theta.swap(next);
        grad.swap(next_grad);
        f = next_f;
        ++iter;
        if (options.record_objective) {
            report.objective_trace.push_back(f);
        }
        converged = grad_ok(grad, theta);
    }

    BinaryTrainResult result;
    result.machine.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
    result.machine.bias = theta[d];
    result.machine.c = c;
    result.machine.converged = converged;
    report.iterations = iter;
    report.objective = f;
    report.gradient_norm = norm(grad);
    report.converged = converged;
    result.report = std::move(report);
    return result;
}

// ---------------------------------------------------------------------------
// One-vs-rest model

bool SvmModel::converged() const {
    return std::all_of(machines.begin(), machines.end(), [](const BinarySvm& m) { return m.converged; });
}

SvmModel train_multiclass(const LabeledDataset& dataset, double c, const SolverOptions& options) {
    SvmModel model;
    model.class_weights = class_weights(dataset.class_counts);
    model.standardizer = fit_standardizer(dataset.rows, dataset.feature_names);
    if (model.standardizer.output_width() == 0) {
        throw ValidationError("every feature is constant over the training window");
    }
    const Matrix z = apply_standardizer(model.standardizer, dataset.rows);
    std::vector<double> sample_weights(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        sample_weights[i] = model.class_weights[index_of(dataset.labels[i])];
    }
    std::array<std::vector<int>, kClassCount> targets;
    for (std::size_t k = 0; k < kClassCount; ++k) {
        targets[k].resize(dataset.size());
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            targets[k][i] = index_of(dataset.labels[i]) == k ? 1 : -1;
        }
    }
    std::array<std::future<BinaryTrainResult>, kClassCount> jobs;
    for (std::size_t k = 0; k < kClassCount; ++k) {
        jobs[k] = std::async(std::launch::async, [&, k] { return train_binary(z, targets[k], sample_weights, c, options); });
    }
    for (std::size_t k = 0; k < kClassCount; ++k) {
        model.machines[k] = jobs[k].get().machine;
    }
    model.window.rows = dataset.size();
    model.window.class_counts = dataset.class_counts;
    if (!dataset.timestamps.empty()) {
        model.window.start = dataset.timestamps.front();
        model.window.end = dataset.timestamps.back() + kHour;
        model.window.last_label_time =
            *std::max_element(dataset.timestamps.begin(), dataset.timestamps.end()) + kHour;
    }
    return model;
}

Scores decision_scores(const SvmModel& model, std::span<const double> row) {
    const auto z = apply_standardizer(model.standardizer, row);
    Scores out{};
    for (std::size_t k = 0; k < kClassCount; ++k) {
        out[k] = model.machines[k].decision(z);
    }
    return out;
}

ClassLabel argmax_class(const Scores& scores) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < kClassCount; ++k) {
        if (scores[k] > scores[best]) {
            best = k;
        }
    }
    return kAllClasses[best];
}

Prediction predict_with_gamma(const Scores& scores, double gamma, Timestamp timestamp) {
    if (!(gamma >= 0.0)) {
        throw std::invalid_argument("gamma must be >= 0");
    }
    Prediction out;
    out.timestamp = timestamp;
    out.scores = scores;
    out.argmax = argmax_class(scores);
    out.gamma = gamma;
    out.actionable = out.argmax != ClassLabel::same && scores[index_of(out.argmax)] >= gamma;
    return out;
}

double balanced_accuracy(std::span<const ClassLabel> predicted, std::span<const ClassLabel> actual) {
    if (predicted.size() != actual.size()) {
        throw std::invalid_argument("prediction and label counts differ");
    }
    ClassCounts hits{}, totals{};
    for (std::size_t i = 0; i < actual.size(); ++i) {
        ++totals[index_of(actual[i])];
        hits[index_of(actual[i])] += predicted[i] == actual[i];
    }
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t k = 0; k < kClassCount; ++k) {
        if (totals[k] > 0) {
            sum += static_cast<double>(hits[k]) / static_cast<double>(totals[k]);
            ++present;
        }
    }
    return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

ModelSelection train_with_validation(const LabeledDataset& dataset, std::span<const double> c_grid,
                                     double validation_fraction, const SolverOptions& options) {
    if (c_grid.empty()) {
        throw ConfigError("C grid is empty");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation fraction must be in (0, 1)");
    }
    ModelSelection out;
    const auto n = dataset.size();
    const auto n_validate = static_cast<std::size_t>(std::floor(static_cast<double>(n) * validation_fraction));
    const LabeledDataset fit_part = dataset.slice(0, n - n_validate);
    const LabeledDataset validate_part = dataset.slice(n - n_validate, n);

    const bool usable = c_grid.size() > 1 && n_validate > 0 && fit_part.size() >= 2 &&
                        std::all_of(fit_part.class_counts.begin(), fit_part.class_counts.end(),
                                    [](std::size_t k) { return k > 0; });
    if (c_grid.size() == 1) {
        out.chosen_c = c_grid.front();
        out.note = "single C candidate";
    } else if (!usable) {
        // Fall back to the middle of the grid.
        out.chosen_c = c_grid[c_grid.size() / 2];
        out.note = "validation split lacks a class; used the middle grid value";
    } else {
        double best = -1.0;
        for (double c : c_grid) {
            const SvmModel candidate = train_multiclass(fit_part, c, options);
            std::vector<ClassLabel> predicted;
            predicted.reserve(validate_part.size());
            for (std::size_t i = 0; i < validate_part.size(); ++i) {
                predicted.push_back(argmax_class(decision_scores(candidate, validate_part.rows.row(i))));
            }
            const double score = balanced_accuracy(predicted, validate_part.labels);
            out.candidates.push_back({c, score});
            if (score > best) {
                best = score;
                out.chosen_c = c;
            }
        }
    }
    out.model = train_multiclass(dataset, out.chosen_c, options);
    return out;
}

// ---------------------------------------------------------------------------
// Snapshot

nlohmann::json model_to_json(const SvmModel& model) {
    using nlohmann::json;
    json machines = json::array();
    for (std::size_t k = 0; k < kClassCount; ++k) {
        const auto& m = model.machines[k];
        machines.push_back({{"class", to_string(kAllClasses[k])},
                            {"weights", m.weights},
                            {"bias", m.bias},
                            {"c", m.c},
                            {"converged", m.converged}});
    }
    json kept_names = json::array();
    for (std::size_t idx : model.standardizer.kept) {
        kept_names.push_back(model.standardizer.input_names[idx]);
    }
    return {
        {"format", "cwf-svm-model"},
        {"version", kModelSnapshotVersion},
        {"standardizer",
         {{"input_names", model.standardizer.input_names},
          {"kept", model.standardizer.kept},
          {"kept_names", kept_names},
          {"mean", model.standardizer.mean},
          {"stddev", model.standardizer.stddev},
          {"dropped", model.standardizer.dropped}}},
        {"machines", machines},
        {"class_weights", model.class_weights},
        {"window",
         {{"start", format_iso8601(model.window.start)},
          {"end", format_iso8601(model.window.end)},
          {"last_label_time", format_iso8601(model.window.last_label_time)},
          {"rows", model.window.rows},
          {"class_counts", model.window.class_counts}}},
    };
}

SvmModel model_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "cwf-svm-model") {
            throw ParseError("not an SVM model snapshot", 0);
        }
        if (doc.at("version").get<int>() != kModelSnapshotVersion) {
            throw ParseError("unsupported model snapshot version " + doc.at("version").dump(), 0);
        }
        SvmModel model;
        const auto& st = doc.at("standardizer");
        model.standardizer.input_names = st.at("input_names").get<std::vector<std::string>>();
        model.standardizer.kept = st.at("kept").get<std::vector<std::size_t>>();
        model.standardizer.mean = st.at("mean").get<std::vector<double>>();
        model.standardizer.stddev = st.at("stddev").get<std::vector<double>>();
        model.standardizer.dropped = st.at("dropped").get<std::vector<std::string>>();
        const auto& machines = doc.at("machines");
        if (machines.size() != kClassCount) {
            throw ParseError("model snapshot must hold 3 machines", 0);
        }
        for (std::size_t k = 0; k < kClassCount; ++k) {
            auto& m = model.machines[k];
            m.weights = machines[k].at("weights").get<std::vector<double>>();
            m.bias = machines[k].at("bias").get<double>();
            m.c = machines[k].at("c").get<double>();
            m.converged = machines[k].at("converged").get<bool>();
            if (m.weights.size() != model.standardizer.output_width()) {
                throw ParseError("machine weight count does not match the standardizer", 0);
            }
        }
        model.class_weights = doc.at("class_weights").get<ClassWeights>();
        const auto& w = doc.at("window");
        auto ts = [&](const char* key) {
            const auto parsed = parse_iso8601(w.at(key).get<std::string>());
            if (!parsed) {
                throw ParseError(std::string("malformed window timestamp '") + key + "'", 0);
            }
            return *parsed;
        };
        model.window.start = ts("start");
        model.window.end = ts("end");
        model.window.last_label_time = ts("last_label_time");
        model.window.rows = w.at("rows").get<std::size_t>();
        model.window.class_counts = w.at("class_counts").get<ClassCounts>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed model snapshot: ") + e.what(), 0);
    }
}

}  // namespace cwf
