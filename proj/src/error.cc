// Copyright 2026 The Cloudlet ITS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cits/error.h"

namespace cits {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateAttribute: return "DuplicateAttribute";
    case ErrorCode::kEmptyRange: return "EmptyRange";
    case ErrorCode::kUnknownAttribute: return "UnknownAttribute";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kTypeMismatch: return "TypeMismatch";
    case ErrorCode::kUnknownEntity: return "UnknownEntity";
    case ErrorCode::kDuplicateEntity: return "DuplicateEntity";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kUnboundVariable: return "UnboundVariable";
    case ErrorCode::kUnknownFormal: return "UnknownFormal";
    case ErrorCode::kUnknownOperation: return "UnknownOperation";
    case ErrorCode::kArityMismatch: return "ArityMismatch";
    case ErrorCode::kUnknownAlertType: return "UnknownAlertType";
    case ErrorCode::kUnauthorized: return "Unauthorized";
    case ErrorCode::kMalformedCommand: return "MalformedCommand";
    case ErrorCode::kInvalidRules: return "InvalidRules";
    case ErrorCode::kNotMember: return "NotMember";
    case ErrorCode::kNotRegistered: return "NotRegistered";
    case ErrorCode::kCapacityExceeded: return "CapacityExceeded";
    case ErrorCode::kSendDenied: return "SendDenied";
    case ErrorCode::kQueueOverflow: return "QueueOverflow";
    case ErrorCode::kUnknownTopic: return "UnknownTopic";
    case ErrorCode::kMalformedMessage: return "MalformedMessage";
    case ErrorCode::kUnknownVehicle: return "UnknownVehicle";
    case ErrorCode::kEmptyPath: return "EmptyPath";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConnectionError: return "ConnectionError";
  }
  return "Unknown";
}

std::optional<ErrorCode> ErrorCodeFromString(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::kConnectionError); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (ToString(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace cits
