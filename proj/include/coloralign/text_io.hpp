#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coloralign::text {

std::vector<std::string_view> split_whitespace(std::string_view line);
std::vector<std::string_view> split_on(std::string_view line, char sep);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace coloralign::text
