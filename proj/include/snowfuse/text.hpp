#ifndef SNOWFUSE_TEXT_HPP
#define SNOWFUSE_TEXT_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace snowfuse::text {

/// Splits on a single-character delimiter; empty fields are kept.
std::vector<std::string> split(std::string_view line, char delim = ',');

std::string_view trim(std::string_view s);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Strict parse of a whole field; `what` is used in the error message.
double parse_double(std::string_view field, std::string_view what);
long long parse_int(std::string_view field, std::string_view what);

/// Reads a text file into lines (trailing '\r' stripped). Throws IoError.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes `content` to `path`, creating parent directories. Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace snowfuse::text

#endif  // SNOWFUSE_TEXT_HPP
