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

#include "cits/policy_eval.h"
#include "cits/error.h"
#include "cits/policy_parser.h"
#include <algorithm>
#include <fstream>
#include <sstream>

namespace cits::policy {
namespace {

using Variables = std::map<std::string, Atom>;

EntityId Bound(std::string const& param, EvalContext const& ctx) {
  if (param == "system") return EntityId::System();
  auto it = ctx.bindings.find(param);
  if (it == ctx.bindings.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "formal parameter '" + param + "' is not bound");
  }
  return it->second;
}

AtomSet const& AsSet(AttributeValue const& v, Term const& t) {
  auto const* s = std::get_if<AtomSet>(&v);
  if (s == nullptr) {
    throw Error(ErrorCode::kTypeMismatch,
                "expected a set expression, found atomic " + Print(t));
  }
  return *s;
}

AtomicValue const& AsAtomic(AttributeValue const& v, Term const& t) {
  auto const* a = std::get_if<AtomicValue>(&v);
  if (a == nullptr) {
    throw Error(ErrorCode::kTypeMismatch,
                "expected an atomic expression, found set " + Print(t));
  }
  return *a;
}

AttributeValue Term_(Term const& t, EvalContext const& ctx, Variables const& vars) {
  switch (t.kind) {
    case Term::Kind::kEffective:
      return ctx.store->Effective(Bound(t.name, ctx), t.attribute);
    case Term::Kind::kDirect:
      return ctx.store->Direct(Bound(t.name, ctx), t.attribute);
    case Term::Kind::kLiteral:
      return AtomicValue(t.literal);
    case Term::Kind::kLiteralSet:
      return t.elements;
    case Term::Kind::kVariable: {
      auto it = vars.find(t.name);
      if (it == vars.end()) {
        throw Error(ErrorCode::kInvalidArgument, "variable '" + t.name + "' unbound");
      }
      return AtomicValue(it->second);
    }
    case Term::Kind::kIntersect:
    case Term::Kind::kUnion: {
      auto a = Term_(t.operands[0], ctx, vars);
      auto b = Term_(t.operands[1], ctx, vars);
      auto const& sa = AsSet(a, t.operands[0]);
      auto const& sb = AsSet(b, t.operands[1]);
      AtomSet out;
      if (t.kind == Term::Kind::kIntersect) {
        std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                              std::inserter(out, out.end()));
      } else {
        std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(),
                       std::inserter(out, out.end()));
      }
      return out;
    }
  }
  return AtomicValue{};
}

class Evaluator {
 public:
  Evaluator(EvalContext const& ctx, Trace* trace) : ctx_(ctx), trace_(trace) {
    if (ctx_.store == nullptr) {
      throw Error(ErrorCode::kInvalidArgument, "evaluation context has no store");
    }
    for (auto const& [param, entity] : ctx_.bindings) subst_[param] = entity.name;
  }

  bool Eval(Formula const& f, int depth) {
    std::size_t slot = 0;
    if (trace_ != nullptr) {
      slot = trace_->size();
      trace_->push_back({depth, Print(f, subst_), false});
    }
    bool v = EvalNode(f, depth);
    if (trace_ != nullptr) (*trace_)[slot].value = v;
    return v;
  }

 private:
  bool EvalNode(Formula const& f, int depth) {
    bool const full = trace_ != nullptr;
    switch (f.kind) {
      case Formula::Kind::kTrue: return true;
      case Formula::Kind::kFalse: return false;
      case Formula::Kind::kParen: return Eval(f.children[0], depth + 1);
      case Formula::Kind::kNot: return !Eval(f.children[0], depth + 1);
      case Formula::Kind::kAnd: {
        bool a = Eval(f.children[0], depth + 1);
        if (!a && !full) return false;
        bool b = Eval(f.children[1], depth + 1);
        return a && b;
      }
      case Formula::Kind::kOr: {
        bool a = Eval(f.children[0], depth + 1);
        if (a && !full) return true;
        bool b = Eval(f.children[1], depth + 1);
        return a || b;
      }
      case Formula::Kind::kExists:
      case Formula::Kind::kForall: {
        bool const exists = f.kind == Formula::Kind::kExists;
        // Materialize the finite domain before iterating.
        auto domain_value = Term_(f.terms[0], ctx_, vars_);
        AtomSet const domain = AsSet(domain_value, f.terms[0]);
        bool result = !exists;
        auto saved = vars_.find(f.variable) == vars_.end()
                         ? std::optional<Atom>{}
                         : std::optional<Atom>{vars_[f.variable]};
        for (auto const& element : domain) {
          vars_[f.variable] = element;
          std::size_t slot = 0;
          if (full) {
            slot = trace_->size();
            trace_->push_back(
                {depth + 1, "[" + f.variable + " = " + element.ToLiteral() + "]", false});
          }
          bool v = Eval(f.children[0], depth + 2);
          if (full) (*trace_)[slot].value = v;
          if (exists && v) result = true;
          if (!exists && !v) result = false;
          if (!full && result == exists) break;
        }
        if (saved) {
          vars_[f.variable] = *saved;
        } else {
          vars_.erase(f.variable);
        }
        return result;
      }
      case Formula::Kind::kSetRel: {
        auto av = Term_(f.terms[0], ctx_, vars_);
        auto bv = Term_(f.terms[1], ctx_, vars_);
        auto const& a = AsSet(av, f.terms[0]);
        auto const& b = AsSet(bv, f.terms[1]);
        bool subseteq = std::includes(b.begin(), b.end(), a.begin(), a.end());
        switch (f.relation) {
          case SetRelation::kSubset: return subseteq && a.size() < b.size();
          case SetRelation::kSubsetEq: return subseteq;
          case SetRelation::kNotSubsetEq: return !subseteq;
          case SetRelation::kIntersect:
            return std::any_of(a.begin(), a.end(),
                               [&](Atom const& x) { return b.contains(x); });
          case SetRelation::kUnion: return !a.empty() || !b.empty();
        }
        return false;
      }
      case Formula::Kind::kIn:
      case Formula::Kind::kNotIn: {
        auto ev = Term_(f.terms[0], ctx_, vars_);
        auto sv = Term_(f.terms[1], ctx_, vars_);
        auto const& element = AsAtomic(ev, f.terms[0]);
        auto const& set = AsSet(sv, f.terms[1]);
        // Null is a member of no set.
        bool member = element.has_value() && set.contains(*element);
        return f.kind == Formula::Kind::kIn ? member : !member;
      }
    }
    return false;
  }

  EvalContext const& ctx_;
  Trace* trace_;
  Substitution subst_;
  Variables vars_;
};

}  // namespace

AttributeValue EvaluateTerm(Term const& term, EvalContext const& ctx,
                            std::map<std::string, Atom> const& variables) {
  return Term_(term, ctx, variables);
}

bool Evaluate(Formula const& formula, EvalContext const& ctx, Trace* trace) {
  return Evaluator(ctx, trace).Eval(formula, 0);
}

bool Evaluate(AuthFunction const& fn, EvalContext const& ctx, Trace* trace) {
  for (auto const& formal : fn.formals) {
    if (!ctx.bindings.contains(formal.name)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "formal '" + formal.name + "' of " + fn.op + " is not bound");
    }
  }
  return Evaluate(fn.body, ctx, trace);
}

PolicySet::PolicySet(std::vector<AuthFunction> functions)
    : functions_(std::move(functions)) {
  for (std::size_t i = 0; i < functions_.size(); ++i) {
    if (!index_.emplace(functions_[i].op, i).second) {
      throw Error(ErrorCode::kSyntaxError,
                  "duplicate declaration of operation '" + functions_[i].op + "'");
    }
  }
}

PolicySet PolicySet::FromText(std::string_view text) {
  return PolicySet(ParsePolicies(text));
}

PolicySet PolicySet::FromFile(std::string const& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return FromText(buf.str());
}

AuthFunction const* PolicySet::Find(std::string const& op) const {
  auto it = index_.find(op);
  return it == index_.end() ? nullptr : &functions_[it->second];
}

AuthFunction const& PolicySet::Get(std::string const& op) const {
  auto const* fn = Find(op);
  if (fn == nullptr) {
    throw Error(ErrorCode::kUnknownOperation, "no authorization function for '" + op + "'");
  }
  return *fn;
}

bool PolicySet::Authorize(std::string const& op, std::vector<EntityId> const& actuals,
                          AttributeStore const& store, Trace* trace) const {
  auto const& fn = Get(op);
  if (actuals.size() != fn.formals.size()) {
    throw Error(ErrorCode::kArityMismatch,
                op + " expects " + std::to_string(fn.formals.size()) +
                    " arguments, got " + std::to_string(actuals.size()));
  }
  EvalContext ctx;
  ctx.store = &store;
  for (std::size_t i = 0; i < actuals.size(); ++i) {
    ctx.bindings.emplace(fn.formals[i].name, actuals[i]);
  }
  return Evaluate(fn, ctx, trace);
}

bool PolicySet::SystemWideHolds(AttributeStore const& store) const {
  EvalContext ctx;
  ctx.store = &store;
  for (auto const& fn : functions_) {
    if (fn.formals.empty() && !Evaluate(fn.body, ctx)) return false;
  }
  return true;
}

}  // namespace cits::policy
