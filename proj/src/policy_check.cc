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

#include "cits/policy_check.h"
#include <optional>

namespace cits::policy {
namespace {

class Checker {
 public:
  Checker(AuthFunction const& fn, AttributeStore const& schema,
          std::vector<Diagnostic>& out)
      : fn_(fn), schema_(schema), out_(out) {}

  void Run() { Check(fn_.body); }

 private:
  void Report(Diagnostic::Severity sev, ErrorCode code, Term const& at,
              std::string msg) {
    out_.push_back({sev, code, fn_.op, at.line, at.column, std::move(msg)});
  }

  // Static type of a term; nullopt when unknown (already reported).
  std::optional<AttributeType> TypeOf(Term const& t) {
    switch (t.kind) {
      case Term::Kind::kEffective:
      case Term::Kind::kDirect: {
        if (!schema_.HasAttribute(t.attribute)) {
          Report(Diagnostic::Severity::kError, ErrorCode::kUnknownAttribute, t,
                 "undeclared attribute \"" + t.attribute + "\"");
          return std::nullopt;
        }
        if (t.kind == Term::Kind::kEffective) WarnCloudletEff(t);
        return schema_.Schema(t.attribute).type;
      }
      case Term::Kind::kLiteral:
      case Term::Kind::kVariable:
        return AttributeType::kAtomic;
      case Term::Kind::kLiteralSet:
        return AttributeType::kSet;
      case Term::Kind::kIntersect:
      case Term::Kind::kUnion:
        ExpectType(t.operands[0], AttributeType::kSet);
        ExpectType(t.operands[1], AttributeType::kSet);
        return AttributeType::kSet;
    }
    return std::nullopt;
  }

  void WarnCloudletEff(Term const& t) {
    bool cloudlet = t.name == "system";
    for (auto const& f : fn_.formals) {
      if (f.name == t.name && f.kind == FormalKind::kCloudlet) cloudlet = true;
    }
    if (cloudlet) {
      Report(Diagnostic::Severity::kWarning, ErrorCode::kTypeMismatch, t,
             "eff() on '" + t.name +
                 "' has no inherited values and evaluates as att()");
    }
  }

  void ExpectType(Term const& t, AttributeType expected) {
    auto type = TypeOf(t);
    if (type && *type != expected) {
      Report(Diagnostic::Severity::kError, ErrorCode::kTypeMismatch, t,
             Print(t) + " is " + std::string(ToString(*type)) + "-valued; expected " +
                 std::string(ToString(expected)));
    }
  }

  void Check(Formula const& f) {
    switch (f.kind) {
      case Formula::Kind::kExists:
      case Formula::Kind::kForall:
        ExpectType(f.terms[0], AttributeType::kSet);
        break;
      case Formula::Kind::kSetRel:
        ExpectType(f.terms[0], AttributeType::kSet);
        ExpectType(f.terms[1], AttributeType::kSet);
        break;
      case Formula::Kind::kIn:
      case Formula::Kind::kNotIn:
        ExpectType(f.terms[0], AttributeType::kAtomic);
        ExpectType(f.terms[1], AttributeType::kSet);
        break;
      default:
        break;
    }
    for (auto const& c : f.children) Check(c);
  }

  AuthFunction const& fn_;
  AttributeStore const& schema_;
  std::vector<Diagnostic>& out_;
};

}  // namespace

std::vector<Diagnostic> CheckPolicies(std::vector<AuthFunction> const& functions,
                                      AttributeStore const& schema) {
  std::vector<Diagnostic> out;
  for (auto const& fn : functions) Checker(fn, schema, out).Run();
  return out;
}

}  // namespace cits::policy
