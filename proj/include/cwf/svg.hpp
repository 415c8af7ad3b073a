#pragma once

#include <string>
#include <vector>

namespace cwf {

struct LineSeries {
    std::string label;
    std::string color;
    std::vector<double> values;
};

// Plain SVG line chart; x is the sample index, tick labels come from x_labels (may be sparse).
std::string svg_line_chart(const std::string& title, const std::vector<std::string>& x_labels,
                           const std::vector<LineSeries>& series);

// Bar chart with positive bars in green and negative bars in red.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values);

}  // namespace cwf
