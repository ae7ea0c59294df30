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

#ifndef CITS_BROKER_H
#define CITS_BROKER_H

#include "cits/alert_rules.h"
#include "cits/attribute_store.h"
#include "cits/bsm.h"
#include "cits/error.h"
#include "cits/policy_eval.h"
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

namespace cits::broker {

inline constexpr std::size_t kMaxMembers = 200;
inline constexpr std::size_t kQueueCapacityBytes = 2'621'440;  // 2.5 MiB

std::string ShadowTopic(std::string const& name);

struct Registration {
  std::string name;
  std::string type;  // Vehicle, Police, Medical, Infrastructure or User
  std::string token;
};

/// One-time registration with the central cloud.
class CentralController {
 public:
  explicit CentralController(std::uint64_t seed = 1);

  /// Throws kDuplicateName, or kInvalidArgument for an unknown type.
  Registration Register(std::string const& name, std::string const& type);
  std::optional<Registration> Find(std::string const& name) const;
  bool IsRegistered(std::string const& name) const { return Find(name).has_value(); }

  static EntityKind KindOf(std::string const& type);

 private:
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::map<std::string, Registration> entities_;
};

/// Anonymized notification: {"message": text, "myEvent": time}.
nlohmann::json MakeNotification(std::string const& text, std::string const& event_time);

struct Delivery {
  std::uint64_t message_id = 0;
  std::string recipient;
  std::string cloudlet;
  std::string topic;
  nlohmann::json payload;
  double delivered_at = 0;  // broker clock
  std::chrono::steady_clock::time_point wall;
};

/// Append-only, readable concurrently.
class Inbox {
 public:
  void Append(Delivery d);
  std::vector<Delivery> Snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<Delivery> items_;
};

enum class Outcome { kNotified, kBlocked, kDropped };
std::string_view ToString(Outcome o);

struct PipelineResult {
  std::uint64_t message_id = 0;
  std::string sender;
  std::string cloudlet;
  Outcome outcome = Outcome::kDropped;
  std::optional<ErrorCode> error;
  std::string reason;
  alerts::Decision decision;
  std::optional<BsmMessage> message;
  std::vector<Delivery> deliveries;
  int forward_denied = 0;
  double received_at = 0;
  double policy_us = 0;    // time spent in authorization calls
  double policy_cpu_us = 0;  // thread CPU time of the same calls
  double pipeline_us = 0;  // dequeue to last delivery
  double trip_us = 0;      // submit to last delivery; 0 without deliveries
};

struct CloudletStats {
  std::uint64_t attempted = 0;
  std::uint64_t notified = 0;
  std::uint64_t blocked = 0;
  std::uint64_t dropped = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t forward_denied = 0;
  std::uint64_t queue_overflow = 0;
  std::uint64_t queued = 0;
  std::size_t queued_bytes = 0;
};

struct BrokerOptions {
  std::size_t max_members = kMaxMembers;
  std::size_t queue_capacity = kQueueCapacityBytes;
  /// Broker clock in seconds; defaults to steady time since construction.
  std::function<double()> clock;
  /// Operator-visible events (rogue detections, rogue updates).
  std::function<void(nlohmann::json const&)> on_event;
  /// Called for every delivery after it is appended to the inbox.
  std::function<void(Delivery const&)> on_delivery;
  /// Called for every pipeline result, whichever thread drained it.
  std::function<void(PipelineResult const&)> on_result;
};

class Broker;

/// Per-cloudlet topic table, membership, rogue list, alert window and
/// bounded inbound queue. One serialized pipeline per cloudlet.
class Cloudlet {
 public:
  std::string const& name() const { return name_; }
  std::set<std::string> Members() const;
  std::set<std::string> Topics() const;
  std::set<std::string> Subscribers(std::string const& topic) const;
  CloudletStats Stats() const;
  std::set<std::string> Rogues() const;

 private:
  friend class Broker;

  struct Pending {
    std::uint64_t id;
    std::string sender;
    std::string topic;
    nlohmann::json payload;
    std::size_t bytes;
    double received_at;
    std::chrono::steady_clock::time_point submitted;
  };

  Cloudlet(std::string name, alerts::AlertRuleSet const& rules);

  std::string name_;
  // Guards topics, members, rogues and window; held for a whole pipeline run.
  mutable std::mutex mu_;
  std::map<std::string, std::set<std::string>> topics_;
  std::set<std::string> members_;
  alerts::RogueList rogues_;
  alerts::AlertWindow window_;
  CloudletStats stats_;
  // Guards the queue only.
  mutable std::mutex queue_mu_;
  std::deque<Pending> queue_;
  std::deque<Pending> evicted_;
  std::size_t queued_bytes_ = 0;
  std::uint64_t overflowed_ = 0;
};

class Broker {
 public:
  /// `policies` must define "send" and "forward"; "update_rogue" is
  /// optional (without it every rogue command is unauthorized).
  Broker(SharedAttributeStore& store, policy::PolicySet const& policies,
         alerts::AlertRuleSet const& rules, CentralController& controller,
         BrokerOptions options = {});
  ~Broker();

  /// Creates the cloudlet (and its store entity) with the reserved topics.
  Cloudlet& AddCloudlet(std::string const& name);
  Cloudlet& GetCloudlet(std::string const& name);
  bool HasCloudlet(std::string const& name) const;
  std::vector<std::string> CloudletNames() const;

  /// Throws kNotRegistered, kCapacityExceeded, kUnknownEntity.
  void Join(std::string const& entity, std::string const& cloudlet);
  void Leave(std::string const& entity, std::string const& cloudlet);
  bool IsMember(std::string const& entity, std::string const& cloudlet) const;
  /// Cloudlets the entity is currently a member of.
  std::vector<std::string> MembershipsOf(std::string const& entity) const;

  /// Throws kNotMember, kUnknownTopic.
  void Subscribe(std::string const& entity, std::string const& cloudlet,
                 std::string const& topic);

  /// Queues a message. Drops the oldest queued messages when the byte
  /// capacity would be exceeded. Throws kNotMember, or kQueueOverflow when
  /// the message alone exceeds the capacity.
  std::uint64_t Submit(std::string const& sender, std::string const& cloudlet,
                       std::string const& topic, nlohmann::json payload);
  /// Runs the pipeline over everything queued on the cloudlet, including
  /// results for messages dropped on overflow.
  std::vector<PipelineResult> Drain(std::string const& cloudlet);
  /// Submit followed by Drain; returns the result for this message.
  PipelineResult PublishTo(std::string const& sender, std::string const& cloudlet,
                           std::string const& topic, nlohmann::json payload);
  /// Publishes to every cloudlet the sender is a member of.
  std::vector<PipelineResult> Publish(std::string const& sender, std::string const& topic,
                                      nlohmann::json const& payload);

  /// Appends to every subscriber's inbox. Throws kUnknownTopic.
  std::vector<Delivery> Deliver(std::string const& cloudlet, std::string const& topic,
                                nlohmann::json const& notification);

  /// Applies a rogue command (the payload of a test/Rogue-Vehicle
  /// publication) on each named cloudlet, or all when `cloudlets` is empty,
  /// where authorize("update_rogue", [publisher, cloudlet]) holds. Throws
  /// kUnauthorized when no cloudlet authorizes, kMalformedCommand.
  nlohmann::json UpdateRogues(std::string const& publisher, nlohmann::json const& command,
                              std::vector<std::string> const& cloudlets = {});

  Inbox const& InboxOf(std::string const& entity) const;
  CentralController& controller() { return controller_; }
  SharedAttributeStore& store() { return store_; }
  policy::PolicySet const& policies() const { return policies_; }
  alerts::AlertRuleSet const& rules() const { return rules_; }
  double Now() const;

 private:
  void RunPipeline(Cloudlet& c, Cloudlet::Pending& p, PipelineResult& r);
  void Emit(nlohmann::json const& event) const;
  Inbox& MutableInbox(std::string const& entity);
  EntityId EnsureEntity(Registration const& reg);
  EntityId IdOf(std::string const& name, AttributeStore const& store) const;

  SharedAttributeStore& store_;
  policy::PolicySet const& policies_;
  alerts::AlertRuleSet const& rules_;
  CentralController& controller_;
  BrokerOptions options_;
  std::chrono::steady_clock::time_point epoch_;

  mutable std::shared_mutex cloudlets_mu_;
  std::map<std::string, std::unique_ptr<Cloudlet>> cloudlets_;
  mutable std::shared_mutex inbox_mu_;
  std::map<std::string, std::unique_ptr<Inbox>> inboxes_;
  std::mutex id_mu_;
  std::uint64_t next_id_ = 1;
};

/// Model-level check: some cloudlet shared by s and v authorizes send from
/// s and forward to v, and every system-wide policy holds.
bool Communicate(policy::PolicySet const& policies, AttributeStore const& store,
                 EntityId const& source, EntityId const& target);

}  // namespace cits::broker

#endif  // CITS_BROKER_H
