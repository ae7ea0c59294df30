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
#include "cits/policy_check.h"
#include "cits/policy_eval.h"
#include "cits/policy_parser.h"
#include "testing/oracle.h"
#include <gmock/gmock.h>

namespace cits::policy {
namespace {

using ::testing::ElementsAre;
using ::testing::Field;

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (Error const& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kIoError;
}

class PolicyEvalTest : public ::testing::Test {
 protected:
  PolicyEvalTest() {
    store_.DeclareAttribute({"groups", AttributeType::kSet, {"a", "b", "c"}});
    store_.DeclareAttribute({"allowed", AttributeType::kSet, {"a", "b", "c"}});
    store_.DeclareAttribute({"type", AttributeType::kAtomic, {"Vehicle", "Police"}});
    store_.AddEntity(v1_);
    store_.AddEntity(tc1_);
    store_.SetSet(v1_, "groups", {"a"});
    store_.SetSet(tc1_, "allowed", {"a", "b"});
    ctx_.store = &store_;
    ctx_.bindings = {{"s", v1_}, {"tc", tc1_}};
  }

  bool Eval(std::string_view text) {
    return Evaluate(ParseFormula(text, {"s", "tc"}), ctx_);
  }

  AttributeStore store_;
  EntityId v1_ = EntityId::Vehicle("v1");
  EntityId tc1_ = EntityId::Cloudlet("tc1");
  EvalContext ctx_;
};

TEST_F(PolicyEvalTest, NullIsMemberOfNoSet) {
  EXPECT_FALSE(Eval(R"(eff(s, "type") in {"Vehicle", "Police"})"));
  EXPECT_TRUE(Eval(R"(eff(s, "type") notin {"Vehicle", "Police"})"));
}

TEST_F(PolicyEvalTest, SubsetSemantics) {
  EXPECT_TRUE(Eval(R"(eff(s, "groups") subseteq att(tc, "allowed"))"));
  EXPECT_TRUE(Eval(R"(eff(s, "groups") subset att(tc, "allowed"))"));
  EXPECT_FALSE(Eval(R"(att(tc, "allowed") subset att(tc, "allowed"))"));
  EXPECT_TRUE(Eval(R"(att(tc, "allowed") nsubseteq eff(s, "groups"))"));
}

TEST_F(PolicyEvalTest, IntersectAndUnionInFormulaPositionTestNonEmpty) {
  EXPECT_TRUE(Eval(R"(eff(s, "groups") intersect att(tc, "allowed"))"));
  EXPECT_FALSE(Eval(R"(eff(s, "groups") intersect {"c"})"));
  EXPECT_FALSE(Eval(R"(att(tc, "groups") union {})"));
  EXPECT_TRUE(Eval(R"((eff(s, "groups") union {"c"}) subseteq {"a", "c"})"));
}

TEST_F(PolicyEvalTest, Quantifiers) {
  EXPECT_TRUE(Eval(R"(exists x in att(tc, "allowed"). x in eff(s, "groups"))"));
  EXPECT_FALSE(Eval(R"(forall x in att(tc, "allowed"). x in eff(s, "groups"))"));
  EXPECT_TRUE(Eval(R"(forall x in {}. false)"));
  EXPECT_FALSE(Eval(R"(exists x in {}. true)"));
}

TEST_F(PolicyEvalTest, TypeErrors) {
  EXPECT_EQ(CodeOf([&] { Eval(R"(eff(s, "groups") in {"a"})"); }), ErrorCode::kTypeMismatch);
  EXPECT_EQ(CodeOf([&] { Eval(R"("a" in eff(s, "type"))"); }), ErrorCode::kTypeMismatch);
  EXPECT_EQ(CodeOf([&] { Eval(R"("a" in eff(s, "nope"))"); }), ErrorCode::kUnknownAttribute);
}

TEST_F(PolicyEvalTest, EffectiveOnCloudletIsDirectValue) {
  EXPECT_TRUE(Eval(R"(eff(tc, "allowed") subseteq att(tc, "allowed") and
                      att(tc, "allowed") subseteq eff(tc, "allowed"))"));
}

TEST_F(PolicyEvalTest, AuthorizeBindsActuals) {
  auto policies = PolicySet::FromText(R"(
    auth send(s: Source, tc: TC) := true
    auth member(s: Source, tc: TC) := eff(s, "groups") subseteq att(tc, "allowed")
  )");
  EXPECT_TRUE(policies.Authorize("send", {v1_, tc1_}, store_));
  EXPECT_TRUE(policies.Authorize("member", {v1_, tc1_}, store_));
  EXPECT_EQ(CodeOf([&] { policies.Authorize("send", {v1_}, store_); }),
            ErrorCode::kArityMismatch);
  EXPECT_EQ(CodeOf([&] { policies.Authorize("fly", {v1_, tc1_}, store_); }),
            ErrorCode::kUnknownOperation);
}

TEST_F(PolicyEvalTest, SystemWidePoliciesHaveNoFormals) {
  store_.DeclareAttribute({"threat", AttributeType::kAtomic, {"low", "high"}});
  auto policies = PolicySet::FromText(R"(
    auth calm() := att(system, "threat") notin {"high"}
    auth send(s, tc) := true
  )");
  EXPECT_TRUE(policies.SystemWideHolds(store_));
  store_.SetAtomic(EntityId::System(), "threat", Atom("high"));
  EXPECT_FALSE(policies.SystemWideHolds(store_));
}

TEST_F(PolicyEvalTest, TraceRecordsEverySubformula) {
  auto fn = ParseAuthFunction(R"(auth f(s, tc) := true and eff(s, "type") in {"Vehicle"})");
  Trace trace;
  EXPECT_FALSE(Evaluate(fn, ctx_, &trace));
  ASSERT_EQ(trace.size(), 3U);
  EXPECT_EQ(trace[0].depth, 0);
  EXPECT_EQ(trace[1].text, "true");
  EXPECT_TRUE(trace[1].value);
  EXPECT_EQ(trace[2].text, R"(eff(v1, "type") in {"Vehicle"})");
  EXPECT_FALSE(trace[2].value);
}

TEST_F(PolicyEvalTest, TraceShowsQuantifierBindings) {
  Trace trace;
  Evaluate(ParseFormula(R"(exists x in att(tc, "allowed"). x in eff(s, "groups"))",
                        {"s", "tc"}),
           ctx_, &trace);
  EXPECT_THAT(trace, ElementsAre(Field(&TraceEntry::value, true),
                                 Field(&TraceEntry::text, R"([x = "a"])"),
                                 Field(&TraceEntry::value, true),
                                 Field(&TraceEntry::text, R"([x = "b"])"),
                                 Field(&TraceEntry::value, false)));
}

TEST(PolicyCheckTest, ReportsUnknownAttributesAndTypeMisuse) {
  AttributeStore schema;
  schema.DeclareAttribute({"type", AttributeType::kAtomic, {"Vehicle"}});
  schema.DeclareAttribute({"zones", AttributeType::kSet, {"a"}});
  auto fns = ParsePolicies(R"(auth send(s: Source, tc: TC) :=
  "Vehicle" in eff(s, "typo") and eff(s, "zones") in {"a"}
auth forward(tc: TC, v: TargetVehicle) := eff(tc, "zones") subseteq eff(v, "zones"))");
  auto diags = CheckPolicies(fns, schema);
  ASSERT_EQ(diags.size(), 3U);
  EXPECT_EQ(diags[0].code, ErrorCode::kUnknownAttribute);
  EXPECT_EQ(diags[0].line, 2);
  EXPECT_EQ(diags[0].column, 16);
  EXPECT_EQ(diags[1].code, ErrorCode::kTypeMismatch);
  EXPECT_EQ(diags[1].severity, Diagnostic::Severity::kError);
  EXPECT_EQ(diags[2].severity, Diagnostic::Severity::kWarning);
  EXPECT_EQ(diags[2].op, "forward");
}

// Independent brute-force evaluator agrees with the main evaluator.
TEST(PolicyEvalProperty, MatchesOracleEvaluator) {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 300; ++round) {
    AttributeStore store;
    testing::OracleWorld world;
    testing::BuildRandomWorld(rng, {}, store, world);
    for (int k = 0; k < 10; ++k) {
      auto f = testing::RandomFormula(rng, world, {"s", "tc"}, 4);
      auto s = world.sources[testing::Uniform(rng, 0, int(world.sources.size()) - 1)];
      auto tc = world.cloudlets[testing::Uniform(rng, 0, int(world.cloudlets.size()) - 1)];
      EvalContext ctx{{{"s", s}, {"tc", tc}}, &store};
      testing::OracleEvaluator oracle(world, {{"s", s}, {"tc", tc}});
      bool expected = oracle.Eval(f);
      ASSERT_EQ(Evaluate(f, ctx), expected) << Print(f);
      // Deterministic, and traced evaluation agrees.
      Trace trace;
      ASSERT_EQ(Evaluate(f, ctx, &trace), expected);
      ASSERT_EQ(trace.front().value, expected);
    }
  }
}

TEST(PolicyEvalProperty, QuantifierDuality) {
  std::mt19937_64 rng(19);
  for (int round = 0; round < 300; ++round) {
    AttributeStore store;
    testing::OracleWorld world;
    testing::BuildRandomWorld(rng, {}, store, world);
    auto f = testing::RandomFormula(rng, world, {"s", "tc"}, 3);
    auto domain = testing::RandomFormula(rng, world, {"s", "tc"}, 0);
    Term set = domain.kind == Formula::Kind::kSetRel || domain.kind == Formula::Kind::kIn
                   ? domain.terms[1]
                   : Term::LiteralSet({1, 2});
    EvalContext ctx{{{"s", world.sources[0]}, {"tc", world.cloudlets[0]}}, &store};
    auto lhs = Formula::Not(Formula::Paren(Formula::Exists("q", set, f)));
    auto rhs = Formula::Forall("q", set, Formula::Not(Formula::Paren(f)));
    ASSERT_EQ(Evaluate(lhs, ctx), Evaluate(rhs, ctx));
  }
}

TEST(PolicyEvalProperty, NullNeverTurnsInLeafTrue) {
  std::mt19937_64 rng(23);
  for (int round = 0; round < 300; ++round) {
    AttributeStore store;
    testing::OracleWorld world;
    testing::BuildRandomWorld(rng, {}, store, world);
    for (auto const& a : world.attributes) {
      if (a.is_set) continue;
      for (auto const& e : world.sources) {
        auto set = Term::LiteralSet(AtomSet(a.range.begin(), a.range.end()));
        auto leaf = Formula::In(Term::Direct("s", a.name), set);
        EvalContext ctx{{{"s", e}}, &store};
        bool before = Evaluate(leaf, ctx);
        auto copy = store;
        copy.SetAtomic(e, a.name, std::nullopt);
        EvalContext after_ctx{{{"s", e}}, &copy};
        bool after = Evaluate(leaf, after_ctx);
        ASSERT_FALSE(!before && after);
      }
    }
  }
}

}  // namespace
}  // namespace cits::policy
