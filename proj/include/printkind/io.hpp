#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace printkind {

// Reads a whole file; throws DataError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file, then renames over the target, so readers never see a
// half-written file. Parent directories are created.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

} // namespace printkind
