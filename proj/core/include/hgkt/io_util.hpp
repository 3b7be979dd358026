#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hgkt {

/// Shortest decimal form that parses back to the identical double
/// (std::to_chars); keeps every text artifact lossless and diffable.
std::string format_double(double v);

/// Fixed one-decimal form used for percent reporting.
std::string format_percent1(double fraction);

/// Strict double parse of the whole token; throws ParseError otherwise.
double parse_double(std::string_view token, const std::string& context);

/// Strict integer parse of the whole token; throws ParseError otherwise.
long long parse_int(std::string_view token, const std::string& context);

/// Splits on a delimiter without any quoting rules (numeric CSV only).
std::vector<std::string_view> split_fields(std::string_view line, char delim = ',');

/// FNV-1a 64-bit over a byte string.
std::uint64_t fnv1a(std::string_view bytes);

/// FNV-1a 64-bit of a file's contents; throws IoError if unreadable.
std::uint64_t hash_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace hgkt
