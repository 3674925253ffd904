#pragma once

#include <string>
#include <string_view>

namespace epigrid {

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
/// Inverse of format_double; throws ValidationError on malformed input.
double parse_double(std::string_view s);

}  // namespace epigrid
