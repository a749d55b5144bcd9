#pragma once

// Plain-text run configuration:
//
//   # comment
//   key = value
//
// Keys are long option names without the leading dashes. Blank lines and
// lines starting with '#' are ignored. A key may appear once.

#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mel/error.hpp"

namespace mel::cli {

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line;
};

using ConfigMap = std::vector<ConfigEntry>;

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline ConfigMap parse_config(std::istream& in) {
  ConfigMap out;
  std::map<std::string, std::size_t> seen;
  std::string raw;
  std::size_t no = 0;
  while (std::getline(in, raw)) {
    ++no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", no);
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("empty key", no);
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (auto [it, fresh] = seen.emplace(key, no); !fresh)
      throw ParseError("duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")", no);
    out.push_back({std::move(key), std::move(value), no});
  }
  return out;
}

inline ConfigMap load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArgumentError("cannot open config file '" + path + "'");
  try {
    return parse_config(f);
  } catch (const ParseError& e) {
    throw ArgumentError(path + ": " + e.what());
  }
}

}  // namespace mel::cli
