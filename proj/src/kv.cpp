// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/kv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dastnet/error.hpp"

namespace dastnet {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

KeyValues parse_key_values(std::string_view text, const std::string& source) {
  KeyValues kv;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const std::string line = trim(text.substr(start, end == std::string_view::npos ? end : end - start));
    ++lineno;
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      throw FormatError(source + ":" + std::to_string(lineno) + ": expected key=value, got '" +
                        line + "'");
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

void write_key_values(const KeyValues& kv, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << format_key_values(kv);
  if (!out) throw FormatError("write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw FormatError("cannot format double");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw FormatError(what + ": not a number: '" + t + "'");
  return value;
}

std::int64_t parse_int(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw FormatError(what + ": not an integer: '" + t + "'");
  return value;
}

std::size_t parse_size(std::string_view text, const std::string& what) {
  const auto v = parse_int(text, what);
  if (v < 0) throw FormatError(what + ": must be non-negative, got " + std::to_string(v));
  return static_cast<std::size_t>(v);
}

std::vector<double> parse_double_list(std::string_view text, const std::string& what) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part, what));
  return out;
}

std::vector<std::size_t> parse_size_list(std::string_view text, const std::string& what) {
  std::vector<std::size_t> out;
  if (trim(text).empty()) return out;
  for (const auto& part : split(text, ',')) out.push_back(parse_size(part, what));
  return out;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

}  // namespace dastnet
