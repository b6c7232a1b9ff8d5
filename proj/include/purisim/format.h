#pragma once

#include <string>

namespace purisim {

/// Shortest decimal that parses back to exactly `x`. Non-finite values
/// become "nan", "inf" or "-inf".
std::string format_double(double x);

/// Inverse of format_double; throws std::invalid_argument on junk.
double parse_double(const std::string& text);

}  // namespace purisim
