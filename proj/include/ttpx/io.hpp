#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ttpx::io {

// Throws DataError when the file cannot be read.
std::string read_text_file(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place, so
// readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Splits on '\n'; a trailing '\r' is dropped from each line.
std::vector<std::string_view> split_lines(std::string_view text);

std::string_view trim(std::string_view text) noexcept;
std::string to_lower_ascii(std::string_view text);

}  // namespace ttpx::io
