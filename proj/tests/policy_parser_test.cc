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
#include "cits/policy_ast.h"
#include "cits/policy_parser.h"
#include "testing/oracle.h"
#include <gmock/gmock.h>

namespace cits::policy {
namespace {

using ::testing::HasSubstr;

PositionedError ParseError(std::string_view text) {
  try {
    (void)ParsePolicies(text);
  } catch (PositionedError const& e) {
    return e;
  }
  ADD_FAILURE() << "expected a parse error for: " << text;
  return PositionedError(ErrorCode::kIoError, "", 0, 0);
}

TEST(PolicyParserTest, OneProductionProgram) {
  auto fn = ParseAuthFunction(
      R"(auth send(s: Source, tc: TC) := "Vehicle" in eff(s, "type"))");
  EXPECT_EQ(fn.op, "send");
  ASSERT_EQ(fn.formals.size(), 2U);
  EXPECT_EQ(fn.formals[0], (Formal{"s", FormalKind::kSource}));
  EXPECT_EQ(fn.formals[1], (Formal{"tc", FormalKind::kCloudlet}));
  EXPECT_EQ(fn.body, Formula::In(Term::Literal("Vehicle"), Term::Effective("s", "type")));
}

TEST(PolicyParserTest, QuantifierBindsVariable) {
  auto fn = ParseAuthFunction(
      R"(auth f(s,tc) := exists x in att(tc,"zones"). x in eff(s,"zones"))");
  EXPECT_EQ(fn.formals[0].kind, FormalKind::kAny);
  EXPECT_EQ(fn.body, Formula::Exists("x", Term::Direct("tc", "zones"),
                                     Formula::In(Term::Variable("x"),
                                                 Term::Effective("s", "zones"))));
}

TEST(PolicyParserTest, UnboundVariableIsRejected) {
  auto e = ParseError(R"(auth f(s,tc) := x in att(tc,"zones"))");
  EXPECT_EQ(e.code(), ErrorCode::kUnboundVariable);
  EXPECT_EQ(e.line(), 1);
  EXPECT_EQ(e.column(), 17);
}

TEST(PolicyParserTest, UnknownFormalIsRejected) {
  auto e = ParseError(R"(auth f(s, tc) := "a" in eff(v, "zones"))");
  EXPECT_EQ(e.code(), ErrorCode::kUnknownFormal);
}

TEST(PolicyParserTest, SyntaxErrorsArePositioned) {
  auto e = ParseError("auth f(s) :=\n  true and\n");
  EXPECT_EQ(e.code(), ErrorCode::kSyntaxError);
  EXPECT_EQ(e.line(), 3);
  EXPECT_THAT(e.what(), HasSubstr("end of input"));

  e = ParseError(R"(auth f(s) := eff(s, "a"))");
  EXPECT_THAT(e.what(), HasSubstr("expected a relation"));

  e = ParseError(R"(auth f(s) := "a" in {"x", )");
  EXPECT_EQ(e.code(), ErrorCode::kSyntaxError);

  e = ParseError("auth f(s) := true\nauth f(t) := false");
  EXPECT_THAT(e.what(), HasSubstr("duplicate"));

  e = ParseError("auth f(s, s) := true");
  EXPECT_THAT(e.what(), HasSubstr("duplicate formal"));
}

TEST(PolicyParserTest, CommentsAndMultipleDeclarations) {
  auto fns = ParsePolicies(R"(
    # who may publish through a cloudlet
    auth send(s: Source, tc: TC) := true;
    auth forward(tc: TC, v: TargetVehicle) :=   # trailing comment
        eff(v, "type") in {"Vehicle", "Police"}
    auth threat() := att(system, "threat") notin {"high"}
  )");
  ASSERT_EQ(fns.size(), 3U);
  EXPECT_EQ(fns[1].formals[1].kind, FormalKind::kTargetVehicle);
  EXPECT_EQ(fns[2].formals.size(), 0U);
  EXPECT_EQ(fns[2].body.terms[0], Term::Direct("system", "threat"));
  EXPECT_TRUE(ParsePolicies("  # nothing here\n").empty());
}

TEST(PolicyParserTest, SetOperatorsInFormulaAndOperandPosition) {
  auto f = ParseFormula(R"(att(s,"a") intersect att(tc,"b"))", {"s", "tc"});
  EXPECT_EQ(f, Formula::SetRel(Term::Direct("s", "a"), SetRelation::kIntersect,
                               Term::Direct("tc", "b")));

  f = ParseFormula(R"((att(s,"a") union att(tc,"b")) subseteq {"x"})", {"s", "tc"});
  EXPECT_EQ(f, Formula::SetRel(Term::Union(Term::Direct("s", "a"), Term::Direct("tc", "b")),
                               SetRelation::kSubsetEq, Term::LiteralSet({"x"})));

  f = ParseFormula(R"((att(s,"a") union att(tc,"b")))", {"s", "tc"});
  EXPECT_EQ(f, Formula::Paren(Formula::SetRel(Term::Direct("s", "a"), SetRelation::kUnion,
                                              Term::Direct("tc", "b"))));

  f = ParseFormula(R"(65 notin att(tc, "limits") union {70})", {"tc"});
  EXPECT_EQ(f, Formula::NotIn(Term::Literal(65), Term::Union(Term::Direct("tc", "limits"),
                                                              Term::LiteralSet({70}))));
}

TEST(PolicyParserTest, PrecedenceAndOverOr) {
  auto f = ParseFormula("true or false and not true", {});
  EXPECT_EQ(f, Formula::Or(Formula::True(),
                           Formula::And(Formula::False(), Formula::Not(Formula::True()))));
}

TEST(PolicyParserTest, QuantifierBodyExtendsRight) {
  auto f = ParseFormula(R"(forall x in {1,2}. x in {1} or x in {2})", {});
  ASSERT_EQ(f.kind, Formula::Kind::kForall);
  EXPECT_EQ(f.children[0].kind, Formula::Kind::kOr);
}

TEST(PolicyParserTest, NegativeAndDecimalNumbers) {
  auto f = ParseFormula("-2.5 in {-2.5, 3}", {});
  EXPECT_EQ(f.terms[0].literal, Atom(-2.5));
  EXPECT_EQ(f.terms[1].elements.size(), 2U);
}

TEST(PolicyPrinterTest, PrintsSubstitutedActuals) {
  auto f = ParseFormula(R"("Vehicle" in eff(s, "type"))", {"s"});
  EXPECT_EQ(Print(f, {{"s", "Car-1"}}), R"("Vehicle" in eff(Car-1, "type"))");
}

TEST(PolicyPrinterTest, NormalizeAddsRequiredParens) {
  auto f = Formula::And(Formula::Or(Formula::True(), Formula::False()),
                        Formula::Exists("x", Term::LiteralSet({1}), Formula::True()));
  auto text = Print(f);
  EXPECT_EQ(text, "(true or false) and (exists x in {1}. true)");
  EXPECT_EQ(ParseFormula(text, {}), Normalize(f));
}

// parse(print(ast)) == ast for normalized generated ASTs.
TEST(PolicyPrinterProperty, RoundTrip) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 300; ++round) {
    AttributeStore store;
    testing::OracleWorld world;
    testing::BuildRandomWorld(rng, {}, store, world);
    for (int k = 0; k < 10; ++k) {
      auto ast = Normalize(testing::RandomFormula(rng, world, {"s", "tc"}, 4));
      AuthFunction fn{"op", {{"s", FormalKind::kSource}, {"tc", FormalKind::kCloudlet}}, ast};
      auto text = Print(fn);
      AuthFunction back;
      ASSERT_NO_THROW(back = ParseAuthFunction(text)) << text;
      ASSERT_EQ(back, fn) << text;
      ASSERT_EQ(Print(back), text);
    }
  }
}

}  // namespace
}  // namespace cits::policy
