#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace blinkflow {

// Nine significant digits, the precision used by every text artifact.
std::string format_number(double value);

// Strict decimal/scientific parse of the whole field; nullopt on junk.
std::optional<double> parse_number(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace blinkflow
