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

#ifndef CITS_POLICY_AST_H
#define CITS_POLICY_AST_H

#include "cits/atom.h"
#include <map>
#include <string>
#include <vector>

namespace cits::policy {

/// A set- or atomic-valued expression inside a formula.
struct Term {
  enum class Kind {
    kEffective,   // eff(param, "att")
    kDirect,      // att(param, "att")
    kLiteral,     // "text" or 42
    kLiteralSet,  // {"a", "b"}
    kVariable,    // quantifier-bound name
    kIntersect,   // A intersect B, operand position
    kUnion,       // A union B, operand position
  };

  Kind kind = Kind::kLiteral;
  std::string name;       // parameter name (eff/att) or variable name
  std::string attribute;  // eff/att
  Atom literal;
  AtomSet elements;
  std::vector<Term> operands;
  // Source position of the term's first token; not part of equality.
  int line = 0;
  int column = 0;

  static Term Effective(std::string param, std::string att);
  static Term Direct(std::string param, std::string att);
  static Term Literal(Atom value);
  static Term LiteralSet(AtomSet values);
  static Term Variable(std::string name);
  static Term Intersect(Term a, Term b);
  static Term Union(Term a, Term b);

  bool is_binary() const { return kind == Kind::kIntersect || kind == Kind::kUnion; }

  friend bool operator==(Term const& a, Term const& b);
};

enum class SetRelation { kSubset, kSubsetEq, kNotSubsetEq, kIntersect, kUnion };

/// Boolean node of the authorization policy grammar.
struct Formula {
  enum class Kind {
    kTrue,
    kFalse,
    kAnd,
    kOr,
    kNot,
    kParen,
    kExists,
    kForall,
    kSetRel,  // terms[0] relation terms[1]
    kIn,      // terms[0] in terms[1]
    kNotIn,
  };

  Kind kind = Kind::kTrue;
  std::vector<Formula> children;
  std::string variable;
  std::vector<Term> terms;
  SetRelation relation = SetRelation::kSubsetEq;

  static Formula True();
  static Formula False();
  static Formula And(Formula a, Formula b);
  static Formula Or(Formula a, Formula b);
  static Formula Not(Formula a);
  static Formula Paren(Formula a);
  static Formula Exists(std::string var, Term domain, Formula body);
  static Formula Forall(std::string var, Term domain, Formula body);
  static Formula SetRel(Term a, SetRelation rel, Term b);
  static Formula In(Term element, Term set);
  static Formula NotIn(Term element, Term set);

  bool is_quantifier() const { return kind == Kind::kExists || kind == Kind::kForall; }

  friend bool operator==(Formula const& a, Formula const& b);
};

enum class FormalKind { kSource, kCloudlet, kTargetVehicle, kAny };

std::string_view ToString(FormalKind kind);

struct Formal {
  std::string name;
  FormalKind kind = FormalKind::kAny;

  friend bool operator==(Formal const&, Formal const&) = default;
};

/// Auth_op: a named, parameterized boolean formula. A function with no
/// formals is a system-wide policy.
struct AuthFunction {
  std::string op;
  std::vector<Formal> formals;
  Formula body;
  int line = 0;

  friend bool operator==(AuthFunction const& a, AuthFunction const& b) {
    return a.op == b.op && a.formals == b.formals && a.body == b.body;
  }
};

std::string_view ToString(SetRelation rel);

/// Parameter name -> display text, used to print substituted formulas.
using Substitution = std::map<std::string, std::string>;

std::string Print(Term const& t, Substitution const& subst = {});
std::string Print(Formula const& f, Substitution const& subst = {});
std::string Print(AuthFunction const& fn);

/// Inserts Paren nodes wherever Print would otherwise need implicit
/// grouping. Parsing the printed text of a normalized formula yields a
/// structurally equal formula.
Formula Normalize(Formula const& f);

}  // namespace cits::policy

#endif  // CITS_POLICY_AST_H
