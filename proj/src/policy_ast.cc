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

#include "cits/policy_ast.h"

namespace cits::policy {

Term Term::Effective(std::string param, std::string att) {
  Term t;
  t.kind = Kind::kEffective;
  t.name = std::move(param);
  t.attribute = std::move(att);
  return t;
}

Term Term::Direct(std::string param, std::string att) {
  Term t;
  t.kind = Kind::kDirect;
  t.name = std::move(param);
  t.attribute = std::move(att);
  return t;
}

Term Term::Literal(Atom value) {
  Term t;
  t.kind = Kind::kLiteral;
  t.literal = std::move(value);
  return t;
}

Term Term::LiteralSet(AtomSet values) {
  Term t;
  t.kind = Kind::kLiteralSet;
  t.elements = std::move(values);
  return t;
}

Term Term::Variable(std::string name) {
  Term t;
  t.kind = Kind::kVariable;
  t.name = std::move(name);
  return t;
}

Term Term::Intersect(Term a, Term b) {
  Term t;
  t.kind = Kind::kIntersect;
  t.operands = {std::move(a), std::move(b)};
  return t;
}

Term Term::Union(Term a, Term b) {
  Term t;
  t.kind = Kind::kUnion;
  t.operands = {std::move(a), std::move(b)};
  return t;
}

bool operator==(Term const& a, Term const& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Term::Kind::kEffective:
    case Term::Kind::kDirect:
      return a.name == b.name && a.attribute == b.attribute;
    case Term::Kind::kLiteral:
      return a.literal == b.literal;
    case Term::Kind::kLiteralSet:
      return a.elements == b.elements;
    case Term::Kind::kVariable:
      return a.name == b.name;
    case Term::Kind::kIntersect:
    case Term::Kind::kUnion:
      return a.operands == b.operands;
  }
  return false;
}

Formula Formula::True() { return Formula{}; }

Formula Formula::False() {
  Formula f;
  f.kind = Kind::kFalse;
  return f;
}

Formula Formula::And(Formula a, Formula b) {
  Formula f;
  f.kind = Kind::kAnd;
  f.children = {std::move(a), std::move(b)};
  return f;
}

Formula Formula::Or(Formula a, Formula b) {
  Formula f;
  f.kind = Kind::kOr;
  f.children = {std::move(a), std::move(b)};
  return f;
}

Formula Formula::Not(Formula a) {
  Formula f;
  f.kind = Kind::kNot;
  f.children = {std::move(a)};
  return f;
}

Formula Formula::Paren(Formula a) {
  Formula f;
  f.kind = Kind::kParen;
  f.children = {std::move(a)};
  return f;
}

Formula Formula::Exists(std::string var, Term domain, Formula body) {
  Formula f;
  f.kind = Kind::kExists;
  f.variable = std::move(var);
  f.terms = {std::move(domain)};
  f.children = {std::move(body)};
  return f;
}

Formula Formula::Forall(std::string var, Term domain, Formula body) {
  auto f = Exists(std::move(var), std::move(domain), std::move(body));
  f.kind = Kind::kForall;
  return f;
}

Formula Formula::SetRel(Term a, SetRelation rel, Term b) {
  Formula f;
  f.kind = Kind::kSetRel;
  f.relation = rel;
  f.terms = {std::move(a), std::move(b)};
  return f;
}

Formula Formula::In(Term element, Term set) {
  Formula f;
  f.kind = Kind::kIn;
  f.terms = {std::move(element), std::move(set)};
  return f;
}

Formula Formula::NotIn(Term element, Term set) {
  auto f = In(std::move(element), std::move(set));
  f.kind = Kind::kNotIn;
  return f;
}

bool operator==(Formula const& a, Formula const& b) {
  if (a.kind != b.kind) return false;
  if (a.children != b.children || a.terms != b.terms) return false;
  if (a.is_quantifier() && a.variable != b.variable) return false;
  if (a.kind == Formula::Kind::kSetRel && a.relation != b.relation) return false;
  return true;
}

std::string_view ToString(FormalKind kind) {
  switch (kind) {
    case FormalKind::kSource: return "Source";
    case FormalKind::kCloudlet: return "TC";
    case FormalKind::kTargetVehicle: return "TargetVehicle";
    case FormalKind::kAny: return "";
  }
  return "";
}

std::string_view ToString(SetRelation rel) {
  switch (rel) {
    case SetRelation::kSubset: return "subset";
    case SetRelation::kSubsetEq: return "subseteq";
    case SetRelation::kNotSubsetEq: return "nsubseteq";
    case SetRelation::kIntersect: return "intersect";
    case SetRelation::kUnion: return "union";
  }
  return "?";
}

namespace {

// Binding strength. Quantifier bodies extend as far right as possible, so
// a quantifier below a connective always needs explicit parentheses.
int Level(Formula const& f) {
  switch (f.kind) {
    case Formula::Kind::kExists:
    case Formula::Kind::kForall: return 0;
    case Formula::Kind::kOr: return 1;
    case Formula::Kind::kAnd: return 2;
    case Formula::Kind::kNot: return 3;
    default: return 4;
  }
}

// Minimum level for each child of a connective.
int MinChildLevel(Formula const& parent, std::size_t index) {
  switch (parent.kind) {
    case Formula::Kind::kNot: return 3;
    case Formula::Kind::kAnd: return index == 0 ? 2 : 3;
    case Formula::Kind::kOr: return index == 0 ? 1 : 2;
    default: return 0;
  }
}

std::string Quote(std::string const& s) { return Atom(s).ToLiteral(); }

std::string Param(std::string const& name, Substitution const& subst) {
  auto it = subst.find(name);
  return it == subst.end() ? name : it->second;
}

std::string Operand(Term const& t, Substitution const& subst) {
  return t.is_binary() ? "(" + Print(t, subst) + ")" : Print(t, subst);
}

std::string Child(Formula const& parent, std::size_t i, Substitution const& subst) {
  auto const& c = parent.children[i];
  auto text = Print(c, subst);
  return Level(c) < MinChildLevel(parent, i) ? "(" + text + ")" : text;
}

}  // namespace

std::string Print(Term const& t, Substitution const& subst) {
  switch (t.kind) {
    case Term::Kind::kEffective:
      return "eff(" + Param(t.name, subst) + ", " + Quote(t.attribute) + ")";
    case Term::Kind::kDirect:
      return "att(" + Param(t.name, subst) + ", " + Quote(t.attribute) + ")";
    case Term::Kind::kLiteral:
      return t.literal.ToLiteral();
    case Term::Kind::kLiteralSet:
      return ToString(t.elements);
    case Term::Kind::kVariable:
      return t.name;
    case Term::Kind::kIntersect:
      return Operand(t.operands[0], subst) + " intersect " + Operand(t.operands[1], subst);
    case Term::Kind::kUnion:
      return Operand(t.operands[0], subst) + " union " + Operand(t.operands[1], subst);
  }
  return "?";
}

std::string Print(Formula const& f, Substitution const& subst) {
  switch (f.kind) {
    case Formula::Kind::kTrue: return "true";
    case Formula::Kind::kFalse: return "false";
    case Formula::Kind::kParen: return "(" + Print(f.children[0], subst) + ")";
    case Formula::Kind::kNot: return "not " + Child(f, 0, subst);
    case Formula::Kind::kAnd:
      return Child(f, 0, subst) + " and " + Child(f, 1, subst);
    case Formula::Kind::kOr:
      return Child(f, 0, subst) + " or " + Child(f, 1, subst);
    case Formula::Kind::kExists:
    case Formula::Kind::kForall:
      return std::string(f.kind == Formula::Kind::kExists ? "exists " : "forall ") +
             f.variable + " in " + Operand(f.terms[0], subst) + ". " +
             Print(f.children[0], subst);
    case Formula::Kind::kSetRel:
      return Operand(f.terms[0], subst) + " " + std::string(ToString(f.relation)) +
             " " + Operand(f.terms[1], subst);
    case Formula::Kind::kIn:
      return Operand(f.terms[0], subst) + " in " + Operand(f.terms[1], subst);
    case Formula::Kind::kNotIn:
      return Operand(f.terms[0], subst) + " notin " + Operand(f.terms[1], subst);
  }
  return "?";
}

std::string Print(AuthFunction const& fn) {
  std::string out = "auth " + fn.op + "(";
  for (std::size_t i = 0; i < fn.formals.size(); ++i) {
    if (i > 0) out += ", ";
    out += fn.formals[i].name;
    if (fn.formals[i].kind != FormalKind::kAny) {
      out += ": " + std::string(ToString(fn.formals[i].kind));
    }
  }
  return out + ") := " + Print(fn.body);
}

Formula Normalize(Formula const& f) {
  Formula out = f;
  for (std::size_t i = 0; i < out.children.size(); ++i) {
    out.children[i] = Normalize(f.children[i]);
    if (Level(out.children[i]) < MinChildLevel(out, i)) {
      out.children[i] = Formula::Paren(std::move(out.children[i]));
    }
  }
  return out;
}

}  // namespace cits::policy
