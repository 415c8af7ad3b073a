#include "cwf/walkforward.hpp"

#include <algorithm>
#include <future>
#include <istream>
#include <limits>
#include <ostream>

#include "cwf/error.hpp"
#include "cwf/format.hpp"

namespace cwf {

RetrainSchedule make_schedule(Timestamp data_start, Timestamp data_end, const ScheduleConfig& config) {
    if (config.window_months < 1 || config.retrain_months < 1) {
        throw ConfigError("window and retrain period must be at least one month");
    }
    if (config.anchor_day < 1 || config.anchor_day > 28) {
        throw ConfigError("anchor day must be in [1, 28]");
    }
    if (add_months(data_start, config.window_months + config.retrain_months) > data_end) {
        throw ValidationError("data from " + format_iso8601(data_start) + " to " + format_iso8601(data_end) +
                              " is shorter than the " + std::to_string(config.window_months) + "-month window plus " +
                              std::to_string(config.retrain_months) + "-month retrain period");
    }
    RetrainSchedule schedule;
    schedule.config = config;
    Timestamp predict_start =
        anchored_month_on_or_after(add_months(data_start, config.window_months), config.anchor_day);
    while (predict_start < data_end) {
        Epoch e;
        e.train_end = predict_start;
        e.train_start = add_months(predict_start, -config.window_months);
        e.predict_start = predict_start;
        e.predict_end = std::min(add_months(predict_start, config.retrain_months), data_end);
        schedule.epochs.push_back(e);
        predict_start = add_months(predict_start, config.retrain_months);
    }
    if (schedule.epochs.empty()) {
        throw ValidationError("data range leaves no prediction month after the training window");
    }
    return schedule;
}

namespace {

struct EpochTraining {
    std::shared_ptr<const SvmModel> model;
    EpochReport report;
};

EpochTraining train_epoch(const LabeledDataset& dataset, const Epoch& epoch, const WalkForwardConfig& config) {
    EpochTraining out;
    out.report.epoch = epoch;
    const auto& ts = dataset.timestamps;
    const auto first = std::lower_bound(ts.begin(), ts.end(), epoch.train_start);
    // Labels are realised one hour after the row; strictly before train_end.
    const auto last = std::lower_bound(ts.begin(), ts.end(), epoch.train_end - kHour);
    const auto begin = static_cast<std::size_t>(first - ts.begin());
    const auto end = std::max(begin, static_cast<std::size_t>(last - ts.begin()));
    const LabeledDataset window = dataset.slice(begin, end);
    out.report.training_rows = window.size();
    out.report.class_counts = window.class_counts;

    for (std::size_t k = 0; k < kClassCount; ++k) {
        if (window.class_counts[k] == 0) {
            out.report.note = "class " + to_string(kAllClasses[k]) + " absent from the training window; no trades";
            return out;
        }
    }
    try {
        if (config.fixed_c) {
            auto model = train_multiclass(window, *config.fixed_c, config.solver);
            out.report.chosen_c = *config.fixed_c;
            out.model = std::make_shared<const SvmModel>(std::move(model));
        } else {
            auto selection = train_with_validation(window, config.c_grid, config.validation_fraction, config.solver);
            out.report.chosen_c = selection.chosen_c;
            out.report.candidates = std::move(selection.candidates);
            out.report.note = std::move(selection.note);
            out.model = std::make_shared<const SvmModel>(std::move(selection.model));
        }
    } catch (const ValidationError& e) {
        out.report.note = std::string("training skipped: ") + e.what();
        return out;
    }
    out.report.trained = true;
    out.report.converged = out.model->converged();
    return out;
}

Prediction unavailable(Timestamp t, double gamma) {
    Prediction p;
    p.timestamp = t;
    p.scores.fill(std::numeric_limits<double>::quiet_NaN());
    p.argmax = ClassLabel::same;
    p.actionable = false;
    p.gamma = gamma;
    p.has_model = false;
    return p;
}

}  // namespace

WalkForwardResult run_walkforward(const LabeledDataset& dataset, const FeatureMatrix& features,
                                  const RetrainSchedule& schedule, const WalkForwardConfig& config) {
    if (dataset.feature_names != features.feature_names) {
        throw ValidationError("labeled dataset and feature matrix have different columns");
    }
    if (!(config.gamma >= 0.0)) {
        throw ConfigError("gamma must be >= 0");
    }
    const std::size_t n_epochs = schedule.epochs.size();
    std::vector<EpochTraining> trained(n_epochs);
    const std::size_t jobs = std::max<std::size_t>(1, config.jobs);
    for (std::size_t base = 0; base < n_epochs; base += jobs) {
        std::vector<std::future<EpochTraining>> batch;
        for (std::size_t e = base; e < std::min(n_epochs, base + jobs); ++e) {
            batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                       [&, e] { return train_epoch(dataset, schedule.epochs[e], config); }));
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            trained[base + i] = batch[i].get();
        }
    }

    WalkForwardResult result;
    const auto& fts = features.timestamps;
    for (std::size_t e = 0; e < n_epochs; ++e) {
        const Epoch& epoch = schedule.epochs[e];
        auto& report = trained[e].report;
        const auto& model = trained[e].model;
        const auto first = std::lower_bound(fts.begin(), fts.end(), epoch.predict_start);
        const auto last = std::lower_bound(fts.begin(), fts.end(), epoch.predict_end);
        for (auto it = first; it != last; ++it) {
            const auto row = static_cast<std::size_t>(it - fts.begin());
            if (model) {
                if (model->window.last_label_time > *it) {
                    throw LogicError("lookahead: model trained on labels realised after " + format_iso8601(*it));
                }
                result.stream.predictions.push_back(
                    predict_with_gamma(decision_scores(*model, features.rows.row(row)), config.gamma, *it));
            } else {
                result.stream.predictions.push_back(unavailable(*it, config.gamma));
            }
            result.stream.epoch_of.push_back(e);
            ++report.predictions;
        }
        result.stream.models.push_back(model);
        result.epochs.push_back(std::move(report));
    }
    return result;
}

PredictionStream apply_gamma(const PredictionStream& stream, double gamma) {
    PredictionStream out = stream;
    for (auto& p : out.predictions) {
        if (p.has_model) {
            p = predict_with_gamma(p.scores, gamma, p.timestamp);
        } else {
            p.gamma = gamma;
        }
    }
    return out;
}

void write_prediction_stream(std::ostream& out, const PredictionStream& stream) {
    out << "timestamp,d_c1,d_c2,d_c3,argmax,actionable\n";
    for (const auto& p : stream.predictions) {
        out << format_iso8601(p.timestamp);
        for (double s : p.scores) {
            out << ',' << format_double(s);
        }
        out << ',' << to_string(p.argmax) << ',' << (p.actionable ? 1 : 0) << '\n';
    }
}

PredictionStream read_prediction_stream(std::istream& in) {
    PredictionStream stream;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError("missing prediction header", 1);
    }
    ++line_no;
    if (trim(line) != "timestamp,d_c1,d_c2,d_c3,argmax,actionable") {
        throw ParseError("prediction header must be timestamp,d_c1,d_c2,d_c3,argmax,actionable", line_no);
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 6) {
            throw ParseError("expected 6 fields", line_no);
        }
        Prediction p;
        const auto ts = parse_iso8601(fields[0]);
        if (!ts) {
            throw ParseError("malformed timestamp", line_no);
        }
        p.timestamp = *ts;
        bool any_nan = false;
        for (std::size_t k = 0; k < kClassCount; ++k) {
            const auto v = parse_double(fields[k + 1]);
            if (!v) {
                throw ParseError("malformed score", line_no);
            }
            p.scores[k] = *v;
            any_nan = any_nan || std::isnan(*v);
        }
        try {
            p.argmax = class_label_from_string(std::string(fields[4]));
        } catch (const ParseError&) {
            throw ParseError("unknown class '" + std::string(fields[4]) + "'", line_no);
        }
        if (fields[5] != "0" && fields[5] != "1") {
            throw ParseError("actionable must be 0 or 1", line_no);
        }
        p.actionable = fields[5] == "1";
        p.has_model = !any_nan;
        if (!stream.predictions.empty() && p.timestamp <= stream.predictions.back().timestamp) {
            throw ParseError("prediction timestamps must be strictly increasing", line_no);
        }
        stream.predictions.push_back(p);
        stream.epoch_of.push_back(0);
    }
    return stream;
}

nlohmann::json epoch_reports_json(const std::vector<EpochReport>& epochs) {
    auto list = nlohmann::json::array();
    for (const auto& r : epochs) {
        nlohmann::json candidates = nlohmann::json::array();
        for (const auto& c : r.candidates) {
            candidates.push_back({{"c", c.c}, {"balanced_accuracy", c.balanced_accuracy}});
        }
        list.push_back({{"train_start", format_iso8601(r.epoch.train_start)},
                        {"train_end", format_iso8601(r.epoch.train_end)},
                        {"predict_start", format_iso8601(r.epoch.predict_start)},
                        {"predict_end", format_iso8601(r.epoch.predict_end)},
                        {"trained", r.trained},
                        {"note", r.note},
                        {"training_rows", r.training_rows},
                        {"class_counts", r.class_counts},
                        {"chosen_c", r.chosen_c},
                        {"validation", candidates},
                        {"converged", r.converged},
                        {"predictions", r.predictions}});
    }
    return list;
}

}  // namespace cwf
