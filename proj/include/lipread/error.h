// Copyright 2026 The lipread Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LIPREAD_ERROR_H_
#define LIPREAD_ERROR_H_

#include <stdexcept>
#include <string>

namespace lipread {

// Error categories double as the machine-parsable token printed by the CLI.
enum class ErrorKind {
  kFormat,
  kArgument,
  kRange,
  kDimension,
  kIo,
  kNoPath,
  kMissingArtifact,
  kConfigMismatch,
  kNumeric,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  const char* category() const { return ErrorKindName(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kArgument: return "argument";
    case ErrorKind::kRange: return "range";
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kNoPath: return "no-path";
    case ErrorKind::kMissingArtifact: return "missing-artifact";
    case ErrorKind::kConfigMismatch: return "config-mismatch";
    case ErrorKind::kNumeric: return "numeric";
  }
  return "unknown";
}

}  // namespace lipread

#endif  // LIPREAD_ERROR_H_
