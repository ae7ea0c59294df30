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

#include "cits/broker.h"
#include "cits/policy_parser.h"
#include "cits/store_config.h"
#include "testing/oracle.h"
#include <gmock/gmock.h>
#include <thread>

namespace cits::broker {
namespace {

using ::testing::ElementsAre;
using ::testing::IsEmpty;
using ::testing::UnorderedElementsAre;
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

json Bsm(std::optional<std::string> alert, double lat = 29.42, double lon = -98.49) {
  json r = {{"Latitude", std::to_string(lat)},
            {"Longitude", std::to_string(lon)},
            {"Time", "2019-03-19 10:56:15.921834"},
            {"Velocity", "30"},
            {"Direction", "north"},
            {"Elevation", "650"},
            {"Posit. Accuracy", "5"},
            {"Steering Wheel Angle", "0"},
            {"Alert", alert ? json(*alert) : json(nullptr)}};
  return {{"state", {{"reported", r}}}};
}

class BrokerTest : public ::testing::Test {
 protected:
  BrokerTest()
      : store_(StoreFromJson(ReadJsonFile(CITS_CONFIG_DIR "/world.json"))),
        policies_(policy::PolicySet::FromFile(CITS_CONFIG_DIR "/policies.auth")),
        rules_(alerts::AlertRuleSet::FromFile(CITS_CONFIG_DIR "/rules.json")),
        broker_(store_, policies_, rules_, controller_, Options()) {
    controller_.Register("Authority", "User");
    for (auto n : {"tc1", "tc2"}) broker_.AddCloudlet(n);
  }

  BrokerOptions Options() {
    BrokerOptions o;
    o.clock = [this] { return now_; };
    o.on_event = [this](json const& e) { events_.push_back(e); };
    return o;
  }

  void Add(std::string const& name, std::string const& type, std::string const& tc = "tc1") {
    controller_.Register(name, type);
    broker_.Join(name, tc);
  }

  PipelineResult Send(std::string const& name, std::optional<std::string> alert,
                      std::string const& tc = "tc1") {
    return broker_.PublishTo(name, tc, ShadowTopic(name), Bsm(std::move(alert)));
  }

  std::vector<std::string> Recipients(PipelineResult const& r) {
    std::vector<std::string> out;
    for (auto const& d : r.deliveries) out.push_back(d.recipient);
    return out;
  }

  double now_ = 0;
  std::vector<json> events_;
  CentralController controller_;
  SharedAttributeStore store_;
  policy::PolicySet policies_;
  alerts::AlertRuleSet rules_;
  Broker broker_;
};

TEST_F(BrokerTest, RegistrationGatesJoin) {
  auto reg = controller_.Register("Car-1", "Vehicle");
  EXPECT_EQ(reg.token.size(), 16U);
  EXPECT_EQ(CodeOf([&] { controller_.Register("Car-1", "Vehicle"); }),
            ErrorCode::kDuplicateName);
  EXPECT_EQ(CodeOf([&] { broker_.Join("Car-2", "tc1"); }), ErrorCode::kNotRegistered);
  EXPECT_EQ(CodeOf([&] { controller_.Register("Car-3", "Boat"); }),
            ErrorCode::kInvalidArgument);
}

TEST_F(BrokerTest, JoinCreatesShadowTopicAndTypeSubscriptions) {
  Add("v1", "Vehicle");
  Add("police7", "Police");
  Add("amb1", "Medical");
  auto& c = broker_.GetCloudlet("tc1");
  EXPECT_TRUE(c.Topics().count("$aws/things/v1/shadow/update"));
  EXPECT_THAT(c.Subscribers("test/devices"), UnorderedElementsAre("v1", "police7", "amb1"));
  EXPECT_THAT(c.Subscribers("test/police"), ElementsAre("police7"));
  EXPECT_THAT(c.Subscribers("test/medical"), ElementsAre("amb1"));
  EXPECT_TRUE(c.Topics().count("test/Rogue-Vehicle"));
  // Association is recorded in the attribute model, with the type attribute.
  store_.Read([](AttributeStore const& s) {
    EXPECT_THAT(s.AssociatedCloudlets(EntityId::Vehicle("v1")),
                ElementsAre(EntityId::Cloudlet("tc1")));
    EXPECT_EQ(s.EffectiveAtomic(EntityId::Vehicle("police7"), "type"), Atom("Police"));
  });
  broker_.Leave("v1", "tc1");
  EXPECT_FALSE(c.Topics().count("$aws/things/v1/shadow/update"));
  EXPECT_THAT(c.Subscribers("test/devices"), UnorderedElementsAre("police7", "amb1"));
}

TEST_F(BrokerTest, MemberCapIsTwoHundred) {
  for (int i = 0; i < 200; ++i) Add("v" + std::to_string(i), "Vehicle");
  controller_.Register("v200", "Vehicle");
  EXPECT_EQ(CodeOf([&] { broker_.Join("v200", "tc1"); }), ErrorCode::kCapacityExceeded);
  EXPECT_EQ(broker_.GetCloudlet("tc1").Members().size(), 200U);
  broker_.Join("v200", "tc2");
}

TEST_F(BrokerTest, NullAlertIsLoggedAndDropped) {
  Add("v1", "Vehicle");
  Add("v2", "Vehicle");
  auto r = Send("v1", std::nullopt);
  EXPECT_EQ(r.outcome, Outcome::kDropped);
  EXPECT_EQ(r.decision.kind, alerts::Decision::Kind::kLogOnly);
  EXPECT_THAT(r.deliveries, IsEmpty());
}

TEST_F(BrokerTest, FirstTireSlipReachesEveryOtherDevice) {
  Add("v1", "Vehicle");
  Add("v2", "Vehicle");
  Add("v3", "Vehicle");
  Add("police7", "Police");
  auto r = Send("v1", "Tireslip");
  EXPECT_EQ(r.outcome, Outcome::kNotified);
  EXPECT_THAT(Recipients(r), UnorderedElementsAre("v2", "v3", "police7"));
  for (auto const& d : r.deliveries) {
    EXPECT_EQ(d.payload, json({{"message", "Ice Threat - Low"},
                               {"myEvent", "2019-03-19 10:56:15.921834"}}));
    EXPECT_EQ(d.topic, "test/devices");
  }
  EXPECT_EQ(broker_.InboxOf("v2").size(), 1U);
  EXPECT_EQ(broker_.InboxOf("v1").size(), 0U);
  auto second = Send("v2", "Tireslip");
  EXPECT_EQ(second.deliveries.at(0).payload["message"], "Ice-threat High");
}

TEST_F(BrokerTest, AccidentGoesOnlyToEmergencyTopics) {
  Add("v1", "Vehicle");
  Add("v2", "Vehicle");
  Add("police7", "Police");
  Add("amb1", "Medical");
  auto r = Send("v1", "Accident");
  EXPECT_THAT(Recipients(r), UnorderedElementsAre("police7", "amb1"));
  for (auto const& d : r.deliveries) {
    EXPECT_EQ(d.payload["message"], "Accident- Require Assistance");
    EXPECT_FALSE(d.payload.contains("vehicle"));
  }
}

TEST_F(BrokerTest, NonMemberCannotPublish) {
  Add("v1", "Vehicle", "tc2");
  Add("v2", "Vehicle");
  EXPECT_EQ(CodeOf([&] { Send("v1", "Tireslip", "tc1"); }), ErrorCode::kNotMember);
  EXPECT_EQ(broker_.InboxOf("v2").size(), 0U);
  EXPECT_EQ(CodeOf([&] {
              broker_.PublishTo("v2", "tc1", "test/devices", Bsm("Tireslip"));
            }),
            ErrorCode::kUnauthorized);
}

TEST_F(BrokerTest, ForwardDeniedSubscriberReceivesNothing) {
  Add("v1", "Vehicle");
  Add("v2", "Vehicle");
  Add("v3", "Vehicle");
  store_.Write([](AttributeStore& s) {
    s.SetAtomic(EntityId::Vehicle("v3"), "status", Atom("revoked"));
  });
  auto r = Send("v1", "Tireslip");
  EXPECT_THAT(Recipients(r), ElementsAre("v2"));
  EXPECT_EQ(r.forward_denied, 1);
  EXPECT_EQ(broker_.InboxOf("v3").size(), 0U);
}

TEST_F(BrokerTest, SendDeniedAndSystemWideBlock) {
  Add("v1", "Vehicle");
  Add("v2", "Vehicle");
  store_.Write([](AttributeStore& s) {
    s.SetAtomic(EntityId::Vehicle("v1"), "status", Atom("revoked"));
  });
  auto r = Send("v1", "Accident");
  EXPECT_EQ(r.outcome, Outcome::kBlocked);
  EXPECT_EQ(r.error, ErrorCode::kSendDenied);
  store_.Write([](AttributeStore& s) {
    s.SetAtomic(EntityId::System(), "mode", Atom("suspended"));
  });
  EXPECT_EQ(Send("v2", "Tireslip").outcome, Outcome::kBlocked);
  auto stats = broker_.GetCloudlet("tc1").Stats();
  EXPECT_EQ(stats.blocked, 2U);
  EXPECT_EQ(stats.attempted, 2U);
}

TEST_F(BrokerTest, MalformedAndUnknownAlertsAreDropped) {
  Add("v1", "Vehicle");
  auto r = broker_.PublishTo("v1", "tc1", ShadowTopic("v1"), json{{"state", 1}});
  EXPECT_EQ(r.outcome, Outcome::kDropped);
  EXPECT_EQ(r.error, ErrorCode::kMalformedMessage);
  EXPECT_EQ(Send("v1", "Flood").error, ErrorCode::kUnknownAlertType);
}

TEST_F(BrokerTest, RogueSenderIsBlockedAndReported) {
  Add("Car-X", "Vehicle");
  Add("v2", "Vehicle");
  auto r = Send("Car-X", "Accident");
  EXPECT_EQ(r.outcome, Outcome::kBlocked);
  EXPECT_THAT(r.deliveries, IsEmpty());
  ASSERT_EQ(events_.size(), 1U);
  EXPECT_EQ(events_[0]["event"], "rogue_detected");
  EXPECT_EQ(events_[0]["vehicle"], "Car-X");
  EXPECT_DOUBLE_EQ(events_[0]["latitude"].get<double>(), 29.42);
}

TEST_F(BrokerTest, RogueUpdatesNeedAuthorization) {
  Add("v1", "Vehicle");
  Add("v2", "Vehicle");
  EXPECT_EQ(CodeOf([&] {
              broker_.UpdateRogues("v1", {{"Alert", "ADD"}, {"myVehicle", "v2"}});
            }),
            ErrorCode::kUnauthorized);
  EXPECT_EQ(CodeOf([&] { broker_.UpdateRogues("Authority", {{"Alert", "WIPE"}}); }),
            ErrorCode::kMalformedCommand);
  auto list = broker_.UpdateRogues("Authority", {{"Alert", "LIST"}, {"myVehicle", nullptr}});
  EXPECT_EQ(list["cloudlets"]["tc1"]["Vehicles"], json({"Car-X", "Car-Y", "Vehicle-Z"}));

  EXPECT_EQ(Send("v1", "Tireslip").outcome, Outcome::kNotified);
  broker_.Publish("Authority", "test/Rogue-Vehicle", {{"Alert", "ADD"}, {"myVehicle", "v1"}});
  EXPECT_EQ(Send("v1", "Tireslip").outcome, Outcome::kBlocked);
  broker_.UpdateRogues("Authority", {{"Alert", "DELETE"}, {"myVehicle", {"v1", "nobody"}}});
  EXPECT_EQ(Send("v1", "Tireslip").outcome, Outcome::kNotified);
  EXPECT_THAT(broker_.GetCloudlet("tc2").Rogues(), ElementsAre("Car-X", "Car-Y", "Vehicle-Z"));
}

TEST_F(BrokerTest, IdentityIsOnlyAddedForPoliceWhenEnabled) {
  rules_.set_include_identity(true);
  Add("v1", "Vehicle");
  Add("police7", "Police");
  Add("amb1", "Medical");
  for (auto const& d : Send("v1", "Accident").deliveries) {
    EXPECT_EQ(d.payload.contains("vehicle"), d.topic == "test/police");
  }
}

// Fan-out recounted from the subscription table and the forward policy.
TEST_F(BrokerTest, FanOutIsSubscribersMinusForwardDenied) {
  std::mt19937_64 rng(61);
  std::vector<std::string> names;
  for (int i = 0; i < 12; ++i) {
    names.push_back("f" + std::to_string(i));
    Add(names.back(), i % 4 == 0 ? "Police" : "Vehicle");
  }
  for (int round = 0; round < 40; ++round) {
    store_.Write([&](AttributeStore& s) {
      for (auto const& n : names) {
        s.SetAtomic(EntityId::Vehicle(n), "status",
                    Atom(testing::Coin(rng, 30) ? "revoked" : "active"));
      }
    });
    now_ += 100;  // fresh window: a single Low notice each round
    auto sender = names[testing::Uniform(rng, 0, int(names.size()) - 1)];
    auto r = Send(sender, "Tireslip");
    if (r.outcome != Outcome::kNotified) continue;
    auto subscribers = broker_.GetCloudlet("tc1").Subscribers(alerts::kDevicesTopic);
    subscribers.erase(sender);
    int denied = 0;
    store_.Read([&](AttributeStore const& s) {
      for (auto const& n : subscribers) {
        if (s.EffectiveAtomic(EntityId::Vehicle(n), "status") == Atom("revoked")) ++denied;
      }
    });
    ASSERT_EQ(r.forward_denied, denied);
    ASSERT_EQ(r.deliveries.size(), subscribers.size() - std::size_t(denied));
  }
}

TEST_F(BrokerTest, DeliverFansOutToSubscribers) {
  EXPECT_THAT(broker_.Deliver("tc1", "test/police", {{"message", "x"}}), IsEmpty());
  Add("v1", "Vehicle");
  Add("v2", "Vehicle");
  Add("v3", "Vehicle");
  auto records = broker_.Deliver("tc1", "test/devices", {{"message", "x"}});
  ASSERT_EQ(records.size(), 3U);
  for (auto const& r : records) EXPECT_EQ(r.payload, records[0].payload);
  EXPECT_EQ(CodeOf([&] { broker_.Deliver("tc1", "test/nowhere", {}); }),
            ErrorCode::kUnknownTopic);
}

TEST_F(BrokerTest, FullQueueDropsOldestAndCounts) {
  Add("v1", "Vehicle");
  Add("v2", "Vehicle");
  auto msg = Bsm("Tireslip");
  msg["state"]["reported"]["Padding"] = std::string(100'000, 'x');
  auto bytes = msg.dump().size();
  std::size_t fit = kQueueCapacityBytes / bytes;
  std::vector<std::uint64_t> ids;
  for (std::size_t i = 0; i < fit + 5; ++i) {
    ids.push_back(broker_.Submit("v1", "tc1", ShadowTopic("v1"), msg));
  }
  auto stats = broker_.GetCloudlet("tc1").Stats();
  EXPECT_EQ(stats.queue_overflow, 5U);
  EXPECT_EQ(stats.queued, fit);
  EXPECT_LE(stats.queued_bytes, kQueueCapacityBytes);
  auto results = broker_.Drain("tc1");
  ASSERT_EQ(results.size(), fit + 5);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(results[i].message_id, ids[i]);
    EXPECT_EQ(results[i].error, ErrorCode::kQueueOverflow);
  }
  stats = broker_.GetCloudlet("tc1").Stats();
  EXPECT_EQ(stats.attempted, stats.notified + stats.blocked + stats.dropped);
  EXPECT_EQ(stats.dropped, 5U);
  msg["state"]["reported"]["Padding"] = std::string(kQueueCapacityBytes, 'x');
  EXPECT_EQ(CodeOf([&] { broker_.Submit("v1", "tc1", ShadowTopic("v1"), msg); }),
            ErrorCode::kQueueOverflow);
}

TEST_F(BrokerTest, CloudletsRunIndependently) {
  for (int i = 0; i < 20; ++i) {
    Add("a" + std::to_string(i), "Vehicle", "tc1");
    Add("b" + std::to_string(i), "Vehicle", "tc2");
  }
  auto worker = [&](char prefix, std::string tc) {
    for (int k = 0; k < 200; ++k) {
      auto name = prefix + std::to_string(k % 20);
      broker_.PublishTo(name, tc, ShadowTopic(name), Bsm(k % 3 ? "Tireslip" : "Null"));
    }
  };
  std::thread t1(worker, 'a', "tc1"), t2(worker, 'b', "tc2"), t3(worker, 'a', "tc1");
  t1.join();
  t2.join();
  t3.join();
  for (auto tc : {"tc1", "tc2"}) {
    auto s = broker_.GetCloudlet(tc).Stats();
    EXPECT_EQ(s.attempted, tc == std::string("tc1") ? 400U : 200U);
    EXPECT_EQ(s.attempted, s.notified + s.blocked + s.dropped);
  }
  for (int i = 0; i < 20; ++i) {
    for (auto const& d : broker_.InboxOf("b" + std::to_string(i)).Snapshot()) {
      EXPECT_EQ(d.cloudlet, "tc2");
    }
  }
}

// Random interleavings of rogue updates and messages: a sender on the
// list at processing time never has a delivery.
TEST_F(BrokerTest, RoguePayloadsAreNeverForwarded) {
  std::mt19937_64 rng(37);
  std::vector<std::string> names;
  for (int i = 0; i < 8; ++i) {
    names.push_back("car" + std::to_string(i));
    Add(names.back(), "Vehicle");
  }
  for (int step = 0; step < 2000; ++step) {
    auto who = names[testing::Uniform(rng, 0, 7)];
    if (testing::Coin(rng, 20)) {
      broker_.UpdateRogues("Authority",
                           {{"Alert", testing::Coin(rng, 50) ? "ADD" : "DELETE"},
                            {"myVehicle", who}},
                           {"tc1"});
      continue;
    }
    bool rogue = broker_.GetCloudlet("tc1").Rogues().count(who) > 0;
    now_ += 0.01;
    auto r = Send(who, testing::Coin(rng, 50) ? "Tireslip" : "Accident");
    if (rogue) {
      ASSERT_EQ(r.decision.kind, alerts::Decision::Kind::kRogueDetected);
      ASSERT_THAT(r.deliveries, IsEmpty());
    } else {
      ASSERT_EQ(r.outcome, Outcome::kNotified);
    }
  }
}

TEST(CommunicateTest, Examples) {
  AttributeStore store;
  auto s = EntityId::Vehicle("s");
  auto v = EntityId::Vehicle("v");
  for (auto const& e : {s, v, EntityId::Cloudlet("tc1"), EntityId::Cloudlet("tc2")}) {
    store.AddEntity(e);
  }
  auto policies = policy::PolicySet::FromText(
      "auth send(s, tc) := true\nauth forward(tc, v) := true\nauth ok() := true");
  store.Associate(s, EntityId::Cloudlet("tc1"));
  store.Associate(v, EntityId::Cloudlet("tc2"));
  EXPECT_FALSE(Communicate(policies, store, s, v));
  store.Associate(v, EntityId::Cloudlet("tc1"));
  EXPECT_TRUE(Communicate(policies, store, s, v));
  auto closed = policy::PolicySet::FromText(
      "auth send(s, tc) := true\nauth forward(tc, v) := true\nauth ok() := false");
  EXPECT_FALSE(Communicate(closed, store, s, v));
}

TEST(CommunicateProperty, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(41);
  for (int round = 0; round < 300; ++round) {
    AttributeStore store;
    testing::OracleWorld world;
    testing::BuildRandomWorld(rng, {}, store, world);
    auto send = policy::AuthFunction{
        "send", {{"s", policy::FormalKind::kSource}, {"tc", policy::FormalKind::kCloudlet}},
        testing::RandomFormula(rng, world, {"s", "tc"}, 3), 1};
    auto forward = policy::AuthFunction{
        "forward",
        {{"tc", policy::FormalKind::kCloudlet}, {"v", policy::FormalKind::kTargetVehicle}},
        testing::RandomFormula(rng, world, {"tc", "v"}, 3), 2};
    std::vector<policy::AuthFunction> all = {send, forward};
    std::vector<policy::AuthFunction> system_wide;
    if (testing::Coin(rng, 50)) {
      system_wide.push_back({"sys", {}, testing::RandomFormula(rng, world, {}, 2), 3});
      all.push_back(system_wide.back());
    }
    policy::PolicySet policies(all);
    for (auto const& s : world.sources) {
      for (auto const& v : world.sources) {
        ASSERT_EQ(Communicate(policies, store, s, v),
                  testing::OracleCommunicate(world, send, forward, system_wide, s, v))
            << round;
      }
    }
  }
}

}  // namespace
}  // namespace cits::broker
