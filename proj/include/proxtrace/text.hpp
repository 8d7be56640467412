#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the file formats.
namespace proxtrace::text {

/// Shortest representation that parses back to the same double.
std::string shortest(double v);
/// Fixed notation with `digits` fractional digits.
std::string fixed(double v, int digits);
/// 17 significant digits (sidecar parameter lists).
std::string sig17(double v);

/// Strict full-string parses; nullopt on any trailing junk.
std::optional<double> to_double(std::string_view s);
std::optional<std::int64_t> to_int(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_ws(std::string_view s);
std::string_view trim(std::string_view s);

/// Reads a whole file; throws DataError when unreadable.
std::string read_file(const std::filesystem::path& path);
/// Writes through a sibling temp file and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view s);
std::string hex64(std::uint64_t v);

}  // namespace proxtrace::text
