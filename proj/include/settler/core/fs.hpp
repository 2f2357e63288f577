#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace settler {

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_file_atomic(const std::filesystem::path& path, std::span<const unsigned char> content);

/// Whole file as bytes; io error when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);

}  // namespace settler
