#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace thalbench {

/// Whole-file read; throws InputError if the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
/// Truncating binary-mode write, so output bytes do not depend on platform
/// newline conventions. Throws InputError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace thalbench
