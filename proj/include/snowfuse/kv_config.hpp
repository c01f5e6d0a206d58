#ifndef SNOWFUSE_KV_CONFIG_HPP
#define SNOWFUSE_KV_CONFIG_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace snowfuse::kv {

using Entries = std::vector<std::pair<std::string, std::string>>;

/// Parses `key=value` lines; blank lines and '#' comments are skipped.
Entries parse(const std::vector<std::string>& lines, const std::string& source);
Entries read(const std::filesystem::path& path);

/// Splits a CLI override of the form `key=value`. Throws ConfigError.
std::pair<std::string, std::string> parse_override(const std::string& text);

bool parse_bool(const std::string& key, const std::string& value);
std::size_t parse_size(const std::string& key, const std::string& value);
double parse_real(const std::string& key, const std::string& value);
std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value);
std::vector<int> parse_int_list(const std::string& key, const std::string& value);

std::string join(const std::vector<std::size_t>& v);
std::string join(const std::vector<int>& v);

}  // namespace snowfuse::kv

#endif  // SNOWFUSE_KV_CONFIG_HPP
