#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace uwsr {

std::vector<unsigned char> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const void* data, std::size_t size);

}  // namespace uwsr
