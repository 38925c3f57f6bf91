#include "aog/config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "aog/errors.hpp"

namespace aog {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';' || t[0] == '[') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (key.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty key");
        if (!out.emplace(key, value).second) throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return out;
}

std::map<std::string, std::string> load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    try {
        return parse_key_values(s.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::pair<int, int> parse_grid(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos || x == 0 || x + 1 == text.size()) {
        throw ParameterError("grid must look like WxH (e.g. 3x3), got '" + text + "'");
    }
    int w = 0, h = 0;
    const char* s = text.data();
    auto r1 = std::from_chars(s, s + x, w);
    auto r2 = std::from_chars(s + x + 1, s + text.size(), h);
    if (r1.ec != std::errc{} || r1.ptr != s + x || r2.ec != std::errc{} || r2.ptr != s + text.size() || w < 1 || h < 1) {
        throw ParameterError("grid must look like WxH with positive integers, got '" + text + "'");
    }
    return {w, h};
}

int kv_int(const std::string& key, const std::string& value) {
    int v = 0;
    auto r = std::from_chars(value.data(), value.data() + value.size(), v);
    if (r.ec != std::errc{} || r.ptr != value.data() + value.size()) {
        throw ParseError("'" + key + "' expects an integer, got '" + value + "'");
    }
    return v;
}

double kv_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("'" + key + "' expects a number, got '" + value + "'");
}

bool kv_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ParseError("'" + key + "' expects true/false, got '" + value + "'");
}

} // namespace aog
