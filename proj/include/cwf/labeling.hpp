#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cwf/features.hpp"
#include "cwf/market_data.hpp"
#include "cwf/matrix.hpp"

namespace cwf {

// c1 "up", c2 "down", c3 "same". The numeric order doubles as the tie-break order.
enum class ClassLabel : std::uint8_t { up = 0, down = 1, same = 2 };

inline constexpr std::size_t kClassCount = 3;
inline constexpr std::array<ClassLabel, kClassCount> kAllClasses = {ClassLabel::up, ClassLabel::down,
                                                                    ClassLabel::same};
inline constexpr double kDefaultClassThreshold = 0.005;

constexpr std::size_t index_of(ClassLabel label) { return static_cast<std::size_t>(label); }

// "c1", "c2", "c3"
std::string to_string(ClassLabel label);
ClassLabel class_label_from_string(const std::string& text);

using ClassCounts = std::array<std::size_t, kClassCount>;
using ClassWeights = std::array<double, kClassCount>;

// up iff r >= threshold, down iff r <= -threshold, same otherwise.
ClassLabel assign_class(double response, double threshold = kDefaultClassThreshold);

struct LabeledDataset {
    std::vector<Timestamp> timestamps;
    std::vector<std::string> feature_names;
    Matrix rows;
    std::vector<ClassLabel> labels;
    std::vector<double> responses;
    ClassCounts class_counts{};

    std::size_t size() const noexcept { return timestamps.size(); }

    // Rows [begin, end) as a new dataset with recomputed class counts.
    LabeledDataset slice(std::size_t begin, std::size_t end) const;
    // Rows at the given indices, in the given order.
    LabeledDataset select(std::span<const std::size_t> indices) const;
};

// Pairs features at bar t with the response realised over (t, t+1h]. The last
// feature row(s) without a next-hour response are dropped.
LabeledDataset build_labeled_dataset(const FeatureMatrix& features, const ReturnSeries& responses,
                                     double threshold = kDefaultClassThreshold);

ClassCounts count_classes(std::span<const ClassLabel> labels);

// w_k = N / (K * N_k). Every class must be present.
ClassWeights class_weights(const ClassCounts& counts);

struct ClassProportions {
    std::vector<Timestamp> timestamps;
    std::vector<std::array<double, kClassCount>> proportions;
};

// Fraction of each class over the trailing `window_bars` labels, one entry per
// bar from index window_bars-1 on.
ClassProportions rolling_class_proportions(std::span<const Timestamp> timestamps,
                                           std::span<const ClassLabel> labels, std::size_t window_bars);

// Calendar form: the window at bar t holds the labels stamped in (t - months, t].
// Entries start at the first bar that is at least `months` after the first label.
ClassProportions rolling_class_proportions_calendar(std::span<const Timestamp> timestamps,
                                                    std::span<const ClassLabel> labels, int months = 9);

void write_labeled_dataset(std::ostream& out, const LabeledDataset& dataset);

}  // namespace cwf
