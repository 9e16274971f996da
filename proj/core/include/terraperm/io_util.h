#ifndef TERRAPERM_IO_UTIL_H_
#define TERRAPERM_IO_UTIL_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace terraperm {

// Writes `content` to `<path>.tmp` and renames it over `path`. Parent
// directories are created as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// Hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace terraperm

#endif  // TERRAPERM_IO_UTIL_H_
