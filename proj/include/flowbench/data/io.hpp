#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace flowbench {

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place, so a
/// reader never sees a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace flowbench
