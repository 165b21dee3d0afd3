#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace spcdist {

/// Shortest-safe decimal rendering with 17 significant digits; parses back to
/// the identical double.
std::string format_real(double value);

/// Parses a full field as a double (no leading/trailing garbage, no spaces).
std::optional<double> parse_real(std::string_view field);

}  // namespace spcdist
