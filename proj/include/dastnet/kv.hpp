// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Flat "key=value" documents (configs, synthetic city specs, reports) and
// the number formatting shared by every text format in the project.

namespace dastnet {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses "key=value" lines; blank lines and lines starting with '#' are
/// skipped. `source` names the input in error messages.
KeyValues parse_key_values(std::string_view text, const std::string& source);
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const KeyValues& kv, const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

double parse_double(std::string_view text, const std::string& what);
std::int64_t parse_int(std::string_view text, const std::string& what);
std::size_t parse_size(std::string_view text, const std::string& what);
std::vector<double> parse_double_list(std::string_view text, const std::string& what);
std::vector<std::size_t> parse_size_list(std::string_view text, const std::string& what);

std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, char sep);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace dastnet
