#include "snowfuse/kv_config.hpp"

#include "snowfuse/error.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::kv {

Entries parse(const std::vector<std::string>& lines, const std::string& source) {
  Entries out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + " line " + std::to_string(i + 1) + ": expected key=value");
    }
    out.emplace_back(std::string(text::trim(line.substr(0, eq))), std::string(text::trim(line.substr(eq + 1))));
  }
  return out;
}

Entries read(const std::filesystem::path& path) { return parse(text::read_lines(path), path.string()); }

std::pair<std::string, std::string> parse_override(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + s + "' is not of the form key=value");
  return {std::string(text::trim(s.substr(0, eq))), std::string(text::trim(s.substr(eq + 1)))};
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  try {
    const auto n = text::parse_int(v, key);
    if (n < 0) throw ConfigError("key '" + key + "': must be non-negative");
    return static_cast<std::size_t>(n);
  } catch (const ParseError&) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    return text::parse_double(v, key);
  } catch (const ParseError&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  if (text::trim(v).empty()) return out;
  for (const auto& part : text::split(v, ',')) out.push_back(parse_size(key, std::string(text::trim(part))));
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (text::trim(v).empty()) return out;
  for (const auto& part : text::split(v, ',')) {
    try {
      out.push_back(static_cast<int>(text::parse_int(part, key)));
    } catch (const ParseError&) {
      throw ConfigError("key '" + key + "': expected integers, got '" + v + "'");
    }
  }
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace snowfuse::kv
