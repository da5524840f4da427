#pragma once

// Flat "key = value" text files: one entry per line, '#' starts a comment,
// keys may contain dots ("solver.k"). Used for experiment specs and for the
// metadata sidecar written next to dataset CSVs.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mom/errors.hpp"

namespace mom {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ArgumentError("cannot parse '" + std::string(s) + "' as a number for " + std::string(what));
  }
  return v;
}

template <class Int>
Int parse_int(std::string_view s, std::string_view what) {
  s = trim(s);
  Int v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ArgumentError("cannot parse '" + std::string(s) + "' as an integer for " + std::string(what));
  }
  return v;
}

// Shortest text that reads back to the same double, capped at 17 digits.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace detail

class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, std::string_view source = "<string>") {
    KeyValueConfig cfg;
    std::size_t line_no = 0;
    for (auto line : detail::split(text, '\n')) {
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ArgumentError(std::string(source) + ":" + std::to_string(line_no) + ": expected 'key = value'");
      }
      const auto key = detail::trim(line.substr(0, eq));
      if (key.empty()) {
        throw ArgumentError(std::string(source) + ":" + std::to_string(line_no) + ": empty key");
      }
      cfg.values_[std::string(key)] = std::string(detail::trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ArgumentError("missing config key '" + key + "'");
    return it->second;
  }

  std::string get_or(const std::string& key, std::string fallback) const {
    return has(key) ? get(key) : std::move(fallback);
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? detail::parse_double(get(key), key) : fallback;
  }

  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    return has(key) ? detail::parse_int<std::size_t>(get(key), key) : fallback;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? detail::parse_int<std::uint64_t>(get(key), key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ArgumentError("cannot parse '" + v + "' as a boolean for " + key);
  }

  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback = {}) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    const auto& v = get(key);
    if (detail::trim(v).empty()) return out;
    for (auto part : detail::split(v, ',')) out.push_back(detail::parse_double(part, key));
    return out;
  }

  std::vector<std::size_t> get_sizes(const std::string& key, std::vector<std::size_t> fallback = {}) const {
    if (!has(key)) return fallback;
    std::vector<std::size_t> out;
    const auto& v = get(key);
    if (detail::trim(v).empty()) return out;
    for (auto part : detail::split(v, ',')) out.push_back(detail::parse_int<std::size_t>(part, key));
    return out;
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  std::string to_string() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mom
