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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace swipeqoe {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kUnidentifiable,
  kNonAlignable,
  kUndefinedCorrelation,
  kUnknownModel,
  kMissingParameterFile,
  kUnimplemented,
  kNonTerminating,
  kIo,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kUnidentifiable: return "unidentifiable";
    case ErrorCode::kNonAlignable: return "non_alignable";
    case ErrorCode::kUndefinedCorrelation: return "undefined_correlation";
    case ErrorCode::kUnknownModel: return "unknown_model";
    case ErrorCode::kMissingParameterFile: return "missing_parameter_file";
    case ErrorCode::kUnimplemented: return "unimplemented";
    case ErrorCode::kNonTerminating: return "non_terminating";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

// Every failure raised by the library carries a machine-readable code.
// Parse failures additionally carry a 1-based line/column (0 when unknown).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Error(ErrorCode code, const std::string& message, std::size_t line,
        std::size_t column)
      : std::runtime_error(message), code_(code), line_(line), column_(column) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  ErrorCode code_;
  std::size_t line_ = 0;
  std::size_t column_ = 0;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace swipeqoe
