#pragma once

#include <map>
#include <string>

namespace aog {

/// Parses `key = value` lines. Blank lines, `#`/`;` comments and `[section]`
/// headers are ignored. Throws ParseError naming the line on malformed input
/// or duplicate keys.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> load_key_values(const std::string& path);

/// Strict "WxH" parsing, e.g. "3x3".
std::pair<int, int> parse_grid(const std::string& text);

// Strict scalar conversions; throw ParseError mentioning `key`.
int kv_int(const std::string& key, const std::string& value);
double kv_double(const std::string& key, const std::string& value);
bool kv_bool(const std::string& key, const std::string& value);

} // namespace aog
