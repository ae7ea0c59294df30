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

#ifndef CITS_POLICY_CHECK_H
#define CITS_POLICY_CHECK_H

#include "cits/attribute_store.h"
#include "cits/error.h"
#include "cits/policy_ast.h"
#include <string>
#include <vector>

namespace cits::policy {

struct Diagnostic {
  enum class Severity { kError, kWarning };
  Severity severity = Severity::kError;
  ErrorCode code = ErrorCode::kTypeMismatch;
  std::string op;
  int line = 0;
  int column = 0;
  std::string message;
};

/// Type-checks attribute references against the declared schema: unknown
/// attributes, set/atomic misuse, and eff() applied to a cloudlet or the
/// system-wide entity (which evaluates as the direct value; warning).
std::vector<Diagnostic> CheckPolicies(std::vector<AuthFunction> const& functions,
                                      AttributeStore const& schema);

}  // namespace cits::policy

#endif  // CITS_POLICY_CHECK_H
