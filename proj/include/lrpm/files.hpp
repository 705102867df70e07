#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace lrpm {

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace lrpm
