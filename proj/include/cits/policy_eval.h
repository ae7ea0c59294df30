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

#ifndef CITS_POLICY_EVAL_H
#define CITS_POLICY_EVAL_H

#include "cits/attribute_store.h"
#include "cits/policy_ast.h"
#include <map>
#include <string>
#include <vector>

namespace cits::policy {

struct EvalContext {
  std::map<std::string, EntityId> bindings;
  AttributeStore const* store = nullptr;
};

/// One evaluated formula node, in pre-order. `text` is the node with actual
/// arguments substituted for formals; quantifier iterations appear as
/// "[x = value]" entries one level below the quantifier.
struct TraceEntry {
  int depth = 0;
  std::string text;
  bool value = false;
};

using Trace = std::vector<TraceEntry>;

/// Evaluates a term to a set or an atomic value (possibly null).
AttributeValue EvaluateTerm(Term const& term, EvalContext const& ctx,
                            std::map<std::string, Atom> const& variables = {});

/// Pure evaluation. Throws kUnknownAttribute / kTypeMismatch when the
/// formula does not fit the store's schema, kInvalidArgument when a formal
/// is unbound. With a trace, every subformula is evaluated (no
/// short-circuit) and recorded.
bool Evaluate(Formula const& formula, EvalContext const& ctx, Trace* trace = nullptr);
bool Evaluate(AuthFunction const& fn, EvalContext const& ctx, Trace* trace = nullptr);

/// The set of declared authorization functions, keyed by operation name.
class PolicySet {
 public:
  PolicySet() = default;
  explicit PolicySet(std::vector<AuthFunction> functions);

  static PolicySet FromText(std::string_view text);
  static PolicySet FromFile(std::string const& path);

  std::vector<AuthFunction> const& functions() const { return functions_; }
  AuthFunction const* Find(std::string const& op) const;
  /// Throws kUnknownOperation.
  AuthFunction const& Get(std::string const& op) const;

  /// Binds actuals positionally and evaluates Auth_op. Throws
  /// kUnknownOperation or kArityMismatch; never silently denies.
  bool Authorize(std::string const& op, std::vector<EntityId> const& actuals,
                 AttributeStore const& store, Trace* trace = nullptr) const;

  /// Policies declared with no formals. All must hold for any communication.
  bool SystemWideHolds(AttributeStore const& store) const;

 private:
  std::vector<AuthFunction> functions_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace cits::policy

#endif  // CITS_POLICY_EVAL_H
