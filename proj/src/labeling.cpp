#include "cwf/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_map>

#include "cwf/error.hpp"
#include "cwf/format.hpp"

namespace cwf {

std::string to_string(ClassLabel label) {
    switch (label) {
        case ClassLabel::up: return "c1";
        case ClassLabel::down: return "c2";
        case ClassLabel::same: return "c3";
    }
    return "?";
}

ClassLabel class_label_from_string(const std::string& text) {
    if (text == "c1" || text == "up") return ClassLabel::up;
    if (text == "c2" || text == "down") return ClassLabel::down;
    if (text == "c3" || text == "same") return ClassLabel::same;
    throw ParseError("unknown class label '" + text + "'", 0);
}

ClassLabel assign_class(double response, double threshold) {
    if (!(threshold > 0.0)) {
        throw DomainError("class threshold must be positive");
    }
    if (!std::isfinite(response)) {
        throw DomainError("response is not finite");
    }
    if (response >= threshold) {
        return ClassLabel::up;
    }
    if (response <= -threshold) {
        return ClassLabel::down;
    }
    return ClassLabel::same;
}

ClassCounts count_classes(std::span<const ClassLabel> labels) {
    ClassCounts counts{};
    for (auto label : labels) {
        ++counts[index_of(label)];
    }
    return counts;
}

LabeledDataset LabeledDataset::slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, size());
    begin = std::min(begin, end);
    LabeledDataset out;
    out.feature_names = feature_names;
    out.rows = Matrix(0, rows.cols());
    for (std::size_t i = begin; i < end; ++i) {
        out.timestamps.push_back(timestamps[i]);
        out.rows.append_row(rows.row(i));
        out.labels.push_back(labels[i]);
        out.responses.push_back(responses[i]);
    }
    out.class_counts = count_classes(out.labels);
    return out;
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> indices) const {
    LabeledDataset out;
    out.feature_names = feature_names;
    out.rows = Matrix(0, rows.cols());
    for (std::size_t i : indices) {
        out.timestamps.push_back(timestamps.at(i));
        out.rows.append_row(rows.row(i));
        out.labels.push_back(labels[i]);
        out.responses.push_back(responses[i]);
    }
    out.class_counts = count_classes(out.labels);
    return out;
}

LabeledDataset build_labeled_dataset(const FeatureMatrix& features, const ReturnSeries& responses,
                                     double threshold) {
    if (responses.timestamps.size() != responses.values.size()) {
        throw ValidationError("response series has mismatched timestamps and values");
    }
    std::unordered_map<std::int64_t, std::size_t> by_time;
    by_time.reserve(responses.size());
    for (std::size_t i = 0; i < responses.size(); ++i) {
        by_time.emplace(to_unix(responses.timestamps[i]), i);
    }
    LabeledDataset out;
    out.feature_names = features.feature_names;
    out.rows = Matrix(0, features.width());
    if (responses.size() == 0) {
        return out;
    }
    const Timestamp last_response = responses.timestamps.back();
    const Timestamp first_response = responses.timestamps.front();
    for (std::size_t i = 0; i < features.size(); ++i) {
        const Timestamp t = features.timestamps[i];
        const Timestamp realised = t + kHour;
        if (realised > last_response) {
            continue;
        }
        const auto it = by_time.find(to_unix(realised));
        if (it == by_time.end() || realised < first_response) {
            throw ValidationError("no response realised at " + format_iso8601(realised) + " for the feature row at " +
                                  format_iso8601(t) + "; features and responses are misaligned");
        }
        const double r = responses.values[it->second];
        out.timestamps.push_back(t);
        out.rows.append_row(features.rows.row(i));
        out.labels.push_back(assign_class(r, threshold));
        out.responses.push_back(r);
    }
    out.class_counts = count_classes(out.labels);
    return out;
}

ClassWeights class_weights(const ClassCounts& counts) {
    std::size_t total = 0;
    for (std::size_t k = 0; k < kClassCount; ++k) {
        if (counts[k] == 0) {
            throw ValidationError("class " + to_string(kAllClasses[k]) +
                                  " has no samples; use a longer training window");
        }
        total += counts[k];
    }
    ClassWeights weights{};
    for (std::size_t k = 0; k < kClassCount; ++k) {
        weights[k] = static_cast<double>(total) / (static_cast<double>(kClassCount) * static_cast<double>(counts[k]));
    }
    return weights;
}

namespace {

std::array<double, kClassCount> proportions_of(const ClassCounts& counts, std::size_t total) {
    std::array<double, kClassCount> out{};
    for (std::size_t k = 0; k < kClassCount; ++k) {
        out[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
    }
    return out;
}

}  // namespace

ClassProportions rolling_class_proportions(std::span<const Timestamp> timestamps,
                                           std::span<const ClassLabel> labels, std::size_t window_bars) {
    if (timestamps.size() != labels.size()) {
        throw ValidationError("labels and timestamps differ in length");
    }
    if (window_bars == 0) {
        throw std::invalid_argument("window must be >= 1 bar");
    }
    if (labels.size() < window_bars) {
        throw ValidationError("label series of " + std::to_string(labels.size()) +
                              " bars is shorter than the rolling window");
    }
    ClassProportions out;
    ClassCounts counts{};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++counts[index_of(labels[i])];
        if (i >= window_bars) {
            --counts[index_of(labels[i - window_bars])];
        }
        if (i + 1 >= window_bars) {
            out.timestamps.push_back(timestamps[i]);
            out.proportions.push_back(proportions_of(counts, window_bars));
        }
    }
    return out;
}

ClassProportions rolling_class_proportions_calendar(std::span<const Timestamp> timestamps,
                                                    std::span<const ClassLabel> labels, int months) {
    if (timestamps.size() != labels.size()) {
        throw ValidationError("labels and timestamps differ in length");
    }
    if (months < 1) {
        throw std::invalid_argument("window must be >= 1 month");
    }
    if (labels.empty() || add_months(timestamps.front(), months) > timestamps.back()) {
        throw ValidationError("label series spans less than the " + std::to_string(months) + "-month window");
    }
    const Timestamp first_full = add_months(timestamps.front(), months);
    ClassProportions out;
    ClassCounts counts{};
    std::size_t tail = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++counts[index_of(labels[i])];
        const Timestamp window_open = add_months(timestamps[i], -months);
        while (timestamps[tail] <= window_open) {
            --counts[index_of(labels[tail])];
            ++tail;
        }
        if (timestamps[i] >= first_full) {
            out.timestamps.push_back(timestamps[i]);
            out.proportions.push_back(proportions_of(counts, i + 1 - tail));
        }
    }
    return out;
}

void write_labeled_dataset(std::ostream& out, const LabeledDataset& dataset) {
    out << "timestamp,label,response";
    for (const auto& name : dataset.feature_names) {
        out << ',' << name;
    }
    out << '\n';
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        out << format_iso8601(dataset.timestamps[i]) << ',' << to_string(dataset.labels[i]) << ','
            << format_double(dataset.responses[i]);
        for (double v : dataset.rows.row(i)) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

}  // namespace cwf
