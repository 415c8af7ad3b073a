#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cwf {

// Shortest decimal text that parses back to the same double. "nan" for NaN.
std::string format_double(double value);

// Strict decimal parse: the whole field must be consumed, '.' decimal point only.
std::optional<double> parse_double(std::string_view text);

std::string_view trim(std::string_view text);

std::vector<std::string_view> split_fields(std::string_view line, char delimiter = ',');

}  // namespace cwf
