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

#include "sigverify/error.hpp"

namespace sigverify {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::FieldCount: return "FieldCount";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::PressureOutOfRange: return "PressureOutOfRange";
    case ErrorCode::MissingRoot: return "MissingRoot";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::DegenerateDuration: return "DegenerateDuration";
    case ErrorCode::DegenerateTrajectory: return "DegenerateTrajectory";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyEnrollment: return "EmptyEnrollment";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::InsufficientEnrollment: return "InsufficientEnrollment";
    case ErrorCode::NonConformantDataset: return "NonConformantDataset";
    case ErrorCode::EmptyScoreList: return "EmptyScoreList";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::AlreadyTrained: return "AlreadyTrained";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::NotTrained: return "NotTrained";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

}  // namespace sigverify
