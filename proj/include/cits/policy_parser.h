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

#ifndef CITS_POLICY_PARSER_H
#define CITS_POLICY_PARSER_H

#include "cits/policy_ast.h"
#include <string>
#include <string_view>
#include <vector>

namespace cits::policy {

/// Parses policy source text: zero or more declarations of the form
///
///   auth <op>(<formal>[: <Kind>], ...) := <formula> [;]
///
/// with `#` line comments. Formula syntax, loosest binding first:
///
///   formula  := exists x in set. formula | forall x in set. formula
///             | formula or formula | formula and formula | not formula
///             | ( formula ) | true | false
///             | set (subset | subseteq | nsubseteq) set
///             | set (intersect | union) set      -- true iff non-empty
///             | atomic (in | notin) set
///   set      := operand ((intersect | union) operand)*
///   operand  := eff(p, "att") | att(p, "att") | "str" | number | x
///             | { literal, ... } | ( set )
///
/// `system` names the system-wide entity inside eff/att. Throws
/// PositionedError with kSyntaxError, kUnboundVariable or kUnknownFormal.
std::vector<AuthFunction> ParsePolicies(std::string_view text);

/// Parses exactly one declaration.
AuthFunction ParseAuthFunction(std::string_view text);

/// Parses a bare formula against the given formal names (test helper and
/// used by the explain command).
Formula ParseFormula(std::string_view text, std::vector<std::string> const& formals);

}  // namespace cits::policy

#endif  // CITS_POLICY_PARSER_H
