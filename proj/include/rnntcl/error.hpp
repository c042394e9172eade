// Copyright 2026  The rnntcl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RNNTCL_ERROR_HPP
#define RNNTCL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace rnntcl {

enum class ErrorCode {
  kInvalidArgument,
  kUnknownToken,
  kDegenerateSignal,
  kConfiguration,
  kTooShort,
  kShape,
  kInvalidLattice,
  kTooLarge,
  kState,
  kVersion,
  kCorruptFile,
  kUndefinedBaseline,
  kParse,
  kIo,
  kDivergence,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kUnknownToken: return "unknown-token";
    case ErrorCode::kDegenerateSignal: return "degenerate-signal";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kTooShort: return "too-short";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kInvalidLattice: return "invalid-lattice";
    case ErrorCode::kTooLarge: return "too-large";
    case ErrorCode::kState: return "state";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kCorruptFile: return "corrupt-file";
    case ErrorCode::kUndefinedBaseline: return "undefined-baseline";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kDivergence: return "divergence";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace rnntcl

#endif  // RNNTCL_ERROR_HPP
