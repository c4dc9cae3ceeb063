// Copyright 2026 The SwipeQoE Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Shared helpers for the delimited-text and JSON interchange files.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "swipeqoe/error.hpp"

namespace swipeqoe::io {

using Json = nlohmann::ordered_json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << content;
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(std::string_view text,
                                                       std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

inline Json parse_json(std::string_view text, std::string_view source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports the byte count consumed, i.e. one past the offender.
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, column] = line_column(text, offset);
    throw Error(ErrorCode::kParse,
                std::string(source) + ": malformed JSON: " + e.what(), line,
                column);
  }
}

// Wraps nlohmann type errors raised while walking a parsed document.
template <typename F>
auto with_schema_errors(std::string_view source, F&& body) {
  try {
    return body();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse,
                std::string(source) + ": schema violation: " + e.what());
  }
}

// One field of a delimited line, with its 1-based starting column.
struct Field {
  std::string_view text;
  std::size_t column = 1;
};

inline std::vector<Field> split_fields(std::string_view line, char delim = ',') {
  std::vector<Field> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    const std::size_t end = pos == std::string_view::npos ? line.size() : pos;
    out.push_back({line.substr(start, end - start), start + 1});
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    std::string_view line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    start = pos + 1;
  }
  return out;
}

[[noreturn]] inline void parse_fail(std::string_view source, std::size_t line,
                                    std::size_t column, const std::string& what) {
  throw Error(ErrorCode::kParse,
              std::string(source) + ":" + std::to_string(line) + ":" +
                  std::to_string(column) + ": " + what,
              line, column);
}

inline std::int64_t parse_int(const Field& f, std::string_view source,
                              std::size_t line) {
  std::int64_t value = 0;
  const char* end = f.text.data() + f.text.size();
  auto [ptr, ec] = std::from_chars(f.text.data(), end, value);
  if (ec != std::errc() || ptr != end || f.text.empty()) {
    parse_fail(source, line, f.column,
               "expected integer, got '" + std::string(f.text) + "'");
  }
  return value;
}

inline double parse_double(const Field& f, std::string_view source,
                           std::size_t line) {
  // strtod instead of from_chars<double>, which libstdc++ 11 lacks.
  const std::string buf(f.text);
  char* end = nullptr;
  const double value = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || std::isnan(value)) {
    parse_fail(source, line, f.column, "expected number, got '" + buf + "'");
  }
  return value;
}

// Shortest decimal that round-trips the double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Versioned delimited files start with "#swipeqoe-<kind> v<N>" followed by
// the column header.
inline std::string version_line(std::string_view kind, int version) {
  return "#swipeqoe-" + std::string(kind) + " v" + std::to_string(version);
}

}  // namespace swipeqoe::io
