#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sevsyn::text {

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
/// Splits and trims every field; an empty input yields an empty list.
std::vector<std::string> split_list(std::string_view s, char sep = ',');

std::optional<double> to_double(std::string_view s);
std::optional<std::int64_t> to_int(std::string_view s);
std::optional<std::uint64_t> to_uint(std::string_view s);

/// Shortest representation that round-trips exactly.
std::string format_double(double v);

bool starts_with(std::string_view s, std::string_view prefix);

/// Glob match supporting '*' (any run of characters) only.
bool wildcard_match(std::string_view pattern, std::string_view s);

}  // namespace sevsyn::text
