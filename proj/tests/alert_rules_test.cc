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

#include "cits/alert_rules.h"
#include "cits/error.h"
#include <gmock/gmock.h>
#include <random>

namespace cits::alerts {
namespace {

using ::testing::ElementsAre;
using ::testing::IsEmpty;
using nlohmann::json;

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

BsmMessage Msg(std::string sender, std::optional<std::string> alert, double at = 0) {
  BsmMessage m;
  m.sender = std::move(sender);
  m.alert = std::move(alert);
  m.time = "2019-03-19 10:56:15.921834";
  m.received_at = at;
  return m;
}

class DecideTest : public ::testing::Test {
 protected:
  Decision Decide(BsmMessage const& m, std::string const& type) {
    return ClassifyAndDecide(m, window_, rules_, rogues_, type);
  }

  AlertRuleSet rules_ = AlertRuleSet::Default();
  RogueList rogues_{rules_.initial_rogues()};
  AlertWindow window_{rules_.window_seconds()};
};

TEST_F(DecideTest, FirstRegularReporterIsLowThreat) {
  auto d = Decide(Msg("v1", "TireSlip"), "Vehicle");
  EXPECT_EQ(d.kind, Decision::Kind::kNotify);
  EXPECT_EQ(d.reporters, 1);
  EXPECT_THAT(d.notices, ElementsAre(Notice{"test/devices", "Ice Threat - Low"}));
}

TEST_F(DecideTest, SecondDistinctReporterIsHighThreat) {
  Decide(Msg("v1", "Tireslip", 0), "Vehicle");
  auto d = Decide(Msg("v2", "Tireslip", 1), "Vehicle");
  EXPECT_THAT(d.notices, ElementsAre(Notice{"test/devices", "Ice-threat High"}));
}

TEST_F(DecideTest, SingleEmergencyReporterIsHighThreat) {
  for (auto type : {"Police", "Medical"}) {
    AlertWindow fresh;
    auto d = ClassifyAndDecide(Msg("p1", "TireSlip"), fresh, rules_, rogues_, type);
    EXPECT_EQ(d.reporters, 1);
    EXPECT_THAT(d.notices, ElementsAre(Notice{"test/devices", "Ice-threat High"}));
  }
}

TEST_F(DecideTest, AccidentGoesToMedicalAndPolice) {
  for (auto type : {"Vehicle", "Infrastructure", "Police", "User"}) {
    auto d = Decide(Msg("x", "Accident"), type);
    EXPECT_THAT(d.notices,
                ElementsAre(Notice{"test/medical", "Accident- Require Assistance"},
                            Notice{"test/police", "Accident- Require Assistance"}));
  }
}

TEST_F(DecideTest, RogueSenderIsDetected) {
  auto d = Decide(Msg("Car-X", "TireSlip"), "Vehicle");
  EXPECT_EQ(d.kind, Decision::Kind::kRogueDetected);
  EXPECT_THAT(d.notices, IsEmpty());
  // Not counted as a reporter either.
  EXPECT_EQ(window_.Count(AlertType::kTireSlip, 0), 0);
}

TEST_F(DecideTest, NullAlertIsLogOnly) {
  for (std::optional<std::string> a : {std::optional<std::string>(), std::optional<std::string>("Null"),
                                        std::optional<std::string>("")}) {
    auto d = Decide(Msg("v1", a), "Vehicle");
    EXPECT_EQ(d.kind, Decision::Kind::kLogOnly);
    EXPECT_THAT(d.notices, IsEmpty());
  }
}

TEST_F(DecideTest, UnknownAlertTypeThrows) {
  EXPECT_EQ(CodeOf([&] { Decide(Msg("v1", "Flood"), "Vehicle"); }),
            ErrorCode::kUnknownAlertType);
}

TEST_F(DecideTest, TireSlipFromInfrastructureMatchesNoRule) {
  EXPECT_EQ(Decide(Msg("rsu", "TireSlip"), "Infrastructure").kind,
            Decision::Kind::kDrop);
}

TEST_F(DecideTest, RogueUpdatesTakeEffectOnNextMessage) {
  ApplyRogueUpdate(ParseRogueCommand({{"Alert", "ADD"}, {"myVehicle", "Car-Q"}}), rogues_);
  EXPECT_EQ(Decide(Msg("Car-Q", "TireSlip"), "Vehicle").kind,
            Decision::Kind::kRogueDetected);
  ApplyRogueUpdate(ParseRogueCommand({{"Alert", "DELETE"}, {"myVehicle", "Car-X"}}), rogues_);
  EXPECT_EQ(Decide(Msg("Car-X", "TireSlip"), "Vehicle").kind, Decision::Kind::kNotify);
}

TEST(RogueListTest, ListAfterLoadingDefaults) {
  RogueList rogues(AlertRuleSet::Default().initial_rogues());
  auto resp = ApplyRogueUpdate(ParseRogueCommand({{"Alert", "LIST"}, {"myVehicle", nullptr}}),
                               rogues);
  EXPECT_EQ(resp["Vehicles"], json({"Car-X", "Car-Y", "Vehicle-Z"}));
  EXPECT_TRUE(resp["myVehicle"].is_null());
  EXPECT_EQ(resp["revision"], 0);
}

TEST(RogueListTest, AddAndDeleteAreIdempotentAndBumpRevision) {
  RogueList rogues;
  auto add = ParseRogueCommand({{"Alert", "ADD"}, {"myVehicle", {"A", "B"}}});
  ApplyRogueUpdate(add, rogues);
  ApplyRogueUpdate(add, rogues);
  EXPECT_THAT(rogues.names(), ElementsAre("A", "B"));
  EXPECT_EQ(rogues.revision(), 4U);
  auto del = ParseRogueCommand({{"Alert", "DELETE"}, {"myVehicle", "A"}});
  ApplyRogueUpdate(del, rogues);
  ApplyRogueUpdate(del, rogues);
  EXPECT_THAT(rogues.names(), ElementsAre("B"));
  EXPECT_EQ(rogues.revision(), 6U);
}

TEST(RogueListTest, MalformedCommands) {
  for (json j : {json(nullptr), json{{"Alert", "ADD"}}, json{{"Alert", "PURGE"}},
                 json{{"Alert", "ADD"}, {"myVehicle", json::array()}},
                 json{{"Alert", "ADD"}, {"myVehicle", 7}},
                 json{{"Alert", "LIST"}, {"myVehicle", "A"}}, json{{"myVehicle", "A"}}}) {
    EXPECT_EQ(CodeOf([&] { ParseRogueCommand(j); }), ErrorCode::kMalformedCommand) << j;
  }
}

TEST(AlertWindowTest, CountsWithinWindow) {
  AlertWindow w(10);
  w.Record(AlertType::kTireSlip, "a", 0);
  w.Record(AlertType::kTireSlip, "b", 0.5);
  EXPECT_EQ(w.Count(AlertType::kTireSlip, 1), 2);
  EXPECT_EQ(w.Count(AlertType::kTireSlip, 10.25), 1);
  EXPECT_EQ(w.Count(AlertType::kTireSlip, 11), 0);
}

TEST(AlertWindowTest, ReporterCountsOnce) {
  AlertWindow w(10);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(w.Record(AlertType::kTireSlip, "a", i * 0.01), 1);
  }
  EXPECT_EQ(w.Count(AlertType::kAccident, 1), 0);
}

// Replays a random stream against a brute-force filter over the full log.
TEST(AlertWindowProperty, MatchesLogReplay) {
  std::mt19937_64 rng(29);
  for (int round = 0; round < 200; ++round) {
    double W = 1 + double(rng() % 20);
    AlertWindow w(W);
    std::vector<std::pair<std::string, double>> log;
    double now = 0;
    for (int i = 0; i < 100; ++i) {
      now += double(rng() % 4000) / 1000.0;
      if (rng() % 3 == 0) {
        std::set<std::string> seen;
        for (auto const& [who, t] : log) {
          if (now - t <= W) seen.insert(who);
        }
        ASSERT_EQ(w.Count(AlertType::kTireSlip, now), int(seen.size()));
      } else {
        std::string who = "v" + std::to_string(rng() % 8);
        log.emplace_back(who, now);
        w.Record(AlertType::kTireSlip, who, now);
      }
    }
  }
}

int Level(Decision const& d) {
  if (d.notices.empty()) return 0;
  return d.notices[0].text == "Ice-threat High" ? 2 : 1;
}

TEST(AlertDecisionProperty, AddingReporterNeverDowngrades) {
  std::mt19937_64 rng(31);
  auto rules = AlertRuleSet::Default();
  RogueList rogues;
  char const* types[] = {"Vehicle", "Police", "Medical"};
  for (int round = 0; round < 500; ++round) {
    AlertWindow w;
    int prior = int(rng() % 5);
    for (int i = 0; i < prior; ++i) {
      w.Record(AlertType::kTireSlip, "other" + std::to_string(i), 0);
    }
    auto type = types[rng() % 3];
    AlertWindow with_extra = w;
    with_extra.Record(AlertType::kTireSlip, "extra", 0);
    AlertWindow w2 = w;
    auto base = ClassifyAndDecide(Msg("me", "TireSlip"), w, rules, rogues, type);
    auto more = ClassifyAndDecide(Msg("me", "TireSlip"), with_extra, rules, rogues, type);
    ASSERT_GE(Level(more), Level(base));
    // Same inputs, same decision.
    auto again = ClassifyAndDecide(Msg("me", "TireSlip"), w2, rules, rogues, type);
    ASSERT_EQ(again.notices, base.notices);
    ASSERT_EQ(again.kind, base.kind);
  }
}

TEST(AlertRuleSetTest, RoundTripsThroughJson) {
  auto rules = AlertRuleSet::Default();
  auto again = AlertRuleSet::FromJson(rules.ToJson());
  EXPECT_EQ(again.ToJson(), rules.ToJson());
  EXPECT_EQ(again.rules().size(), 4U);
  EXPECT_DOUBLE_EQ(again.window_seconds(), 10);
  EXPECT_FALSE(again.include_identity());
}

TEST(AlertRuleSetTest, RejectsOverlapsAndUndeclaredTopics) {
  auto rule = [](json source, json number, char const* topic = "test/devices") {
    return json{{"Source", source}, {"Number", number},
                {"Notification", "x"}, {"Topics", {topic}}};
  };
  std::vector<json> bad = {
      {{"TireSlip", {rule({"Vehicle"}, 1), rule({"Vehicle"}, {{"min", 1}})}}},
      {{"TireSlip", {rule("*", 2), rule({"Police"}, {{"min", 1}, {"max", 3}})}}},
      {{"Accident", {rule("*", 1, "test/nowhere")}}},
      {{"TireSlip", {rule({"Vehicle"}, {{"min", 3}, {"max", 2}})}}},
      {{"TireSlip", {rule({"Vehicle"}, 0)}}},
      {{"Flood", json::array()}},
      {{"WindowSeconds", 0}},
      {{"Rogue", {"Car-X"}}},
  };
  for (auto const& doc : bad) {
    EXPECT_EQ(CodeOf([&] { AlertRuleSet::FromJson(doc); }), ErrorCode::kInvalidRules) << doc;
  }
  EXPECT_NO_THROW(AlertRuleSet::FromJson(
      {{"TireSlip", {rule({"Vehicle"}, 1), rule({"Vehicle"}, {{"min", 2}}),
                     rule({"Police"}, 1)}}}));
}

TEST(BsmMessageTest, ParsesNumericStrings) {
  auto m = BsmMessage::FromJson(json::parse(R"({"state": {"reported": {
      "Longitude": "-98.50038363", "Latitude": "29.472741982",
      "Time": "2019-03-19 11:27:40.237734", "Velocity": "30",
      "Direction": "north", "Elevation": "650", "Posit. Accuracy": "5",
      "Steering Wheel Angle": "0", "Alert": "Tireslip"}}})"));
  EXPECT_DOUBLE_EQ(m.latitude, 29.472741982);
  EXPECT_DOUBLE_EQ(m.longitude, -98.50038363);
  EXPECT_DOUBLE_EQ(m.velocity, 30);
  EXPECT_EQ(m.direction, "north");
  EXPECT_EQ(m.alert, "Tireslip");
  EXPECT_EQ(BsmMessage::FromJson(m.ToJson()).ToJson(), m.ToJson());
}

TEST(BsmMessageTest, RejectsOutOfRangeAndMissingFields) {
  auto with = [](json reported) { return json{{"state", {{"reported", reported}}}}; };
  json ok = {{"Latitude", 29.4}, {"Longitude", -98.5}, {"Time", "2019-03-19T11:27:40Z"}};
  EXPECT_NO_THROW(BsmMessage::FromJson(with(ok)));
  std::vector<json> bad;
  // Coordinates as printed in the sample with the two fields swapped.
  bad.push_back(ok);
  bad.back()["Latitude"] = "-98.50038363";
  bad.back()["Longitude"] = "29.472741982";
  bad.push_back(ok);
  bad.back().erase("Time");
  bad.push_back(ok);
  bad.back()["Time"] = "yesterday";
  bad.push_back(ok);
  bad.back()["Velocity"] = "fast";
  bad.push_back(ok);
  bad.back()["Alert"] = 3;
  for (auto const& r : bad) {
    EXPECT_EQ(CodeOf([&] { BsmMessage::FromJson(with(r)); }), ErrorCode::kMalformedMessage) << r;
  }
  EXPECT_EQ(CodeOf([&] { BsmMessage::FromJson(json::array()); }), ErrorCode::kMalformedMessage);
}

}  // namespace
}  // namespace cits::alerts
