#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "ndactor/wah.hpp"

namespace ndactor::wah {

// Index file layout, all integers little-endian u32:
//   "WAH1"  row_count  distinct_count  total_words
//   distinct_count x (value, offset, length)
//   total_words x word
std::vector<std::byte> serialize_index(const WahIndex& idx);
WahIndex parse_index(std::span<const std::byte> bytes);

void write_index_file(const std::filesystem::path& path, const WahIndex& idx);
WahIndex read_index_file(const std::filesystem::path& path);

/// Little-endian u32 stream.
std::vector<std::uint32_t> read_values_raw(const std::filesystem::path& path);

/// One unsigned integer per line; blank lines are skipped.
std::vector<std::uint32_t> read_values_text(const std::filesystem::path& path);

}  // namespace ndactor::wah
