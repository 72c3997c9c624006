#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chil {

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char delim);

/// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);

}  // namespace chil
