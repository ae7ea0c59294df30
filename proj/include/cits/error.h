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

#ifndef CITS_ERROR_H
#define CITS_ERROR_H

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cits {

enum class ErrorCode {
  // attribute model
  kDuplicateAttribute,
  kEmptyRange,
  kUnknownAttribute,
  kOutOfRange,
  kTypeMismatch,
  kUnknownEntity,
  kDuplicateEntity,
  kInvalidArgument,
  // policy language
  kSyntaxError,
  kUnboundVariable,
  kUnknownFormal,
  kUnknownOperation,
  kArityMismatch,
  // alert rules
  kUnknownAlertType,
  kUnauthorized,
  kMalformedCommand,
  kInvalidRules,
  // broker
  kNotMember,
  kNotRegistered,
  kCapacityExceeded,
  kSendDenied,
  kQueueOverflow,
  kUnknownTopic,
  kMalformedMessage,
  // geo / sim
  kUnknownVehicle,
  kEmptyPath,
  kDuplicateName,
  kConfigError,
  kIoError,
  kConnectionError,
};

std::string_view ToString(ErrorCode code);
std::optional<ErrorCode> ErrorCodeFromString(std::string_view name);

/// Domain error carrying a machine-readable code. Every failure the library
/// reports to callers goes through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string const& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A parse or configuration error with a source position (1-based).
class PositionedError : public Error {
 public:
  PositionedError(ErrorCode code, std::string const& message, int line,
                  int column)
      : Error(code, message), line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace cits

#endif  // CITS_ERROR_H
