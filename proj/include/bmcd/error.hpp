// Copyright (c) 2026 The bmcd authors.
//
// Licensed under the Apache License, Version 2.0 (the "License").
// You may not use this file except in compliance with the License. You may
// obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0.
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace bmcd {

/// Classifies hard failures raised by the library.
enum class ErrorCode {
  InvalidArgument,
  InvalidParameters,
  Parse,
  NonMonotoneDates,
  MeanUndefined,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::InvalidParameters: return "INVALID_PARAMETERS";
    case ErrorCode::Parse: return "PARSE_ERROR";
    case ErrorCode::NonMonotoneDates: return "NON_MONOTONE_DATES";
    case ErrorCode::MeanUndefined: return "MEAN_UNDEFINED";
    case ErrorCode::Io: return "IO_ERROR";
  }
  return "UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace bmcd
