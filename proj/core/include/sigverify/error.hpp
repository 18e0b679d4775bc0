// Copyright 2026 The sigverify Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sigverify {

enum class ErrorCode {
  // io
  MalformedHeader,
  FieldCount,
  InvalidValue,
  NonMonotonicTime,
  PressureOutOfRange,
  MissingRoot,
  UnreadableFile,
  // signal
  DegenerateDuration,
  DegenerateTrajectory,
  TooShort,
  // hmm
  DimensionMismatch,
  EmptyEnrollment,
  NumericalFailure,
  VersionMismatch,
  SchemaViolation,
  // eval
  InsufficientEnrollment,
  NonConformantDataset,
  EmptyScoreList,
  // service
  QuotaExceeded,
  ParseError,
  AlreadyTrained,
  UnknownUser,
  NotTrained,
  // generic
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// All library failures are reported as sigverify::Error carrying a code
/// that callers can switch on; what() holds a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sigverify
