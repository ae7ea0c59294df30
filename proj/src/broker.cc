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
#include <algorithm>
#include <cstdio>
#include <ctime>

namespace cits::broker {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double Micros(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

double ThreadCpuMicros() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return double(ts.tv_sec) * 1e6 + double(ts.tv_nsec) / 1e3;
}

}  // namespace

std::string ShadowTopic(std::string const& name) {
  return "$aws/things/" + name + "/shadow/update";
}

CentralController::CentralController(std::uint64_t seed) : rng_(seed) {}

EntityKind CentralController::KindOf(std::string const& type) {
  if (type == "Vehicle" || type == "Police" || type == "Medical") {
    return EntityKind::kVehicle;
  }
  if (type == "Infrastructure") return EntityKind::kInfrastructure;
  if (type == "User") return EntityKind::kUser;
  throw Error(ErrorCode::kInvalidArgument, "unknown entity type " + type);
}

Registration CentralController::Register(std::string const& name,
                                         std::string const& type) {
  KindOf(type);
  if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "empty name");
  std::lock_guard lock(mu_);
  if (entities_.count(name)) {
    throw Error(ErrorCode::kDuplicateName, name + " is already registered");
  }
  char token[17];
  std::snprintf(token, sizeof token, "%016llx",
                static_cast<unsigned long long>(rng_()));
  Registration reg{name, type, token};
  entities_.emplace(name, reg);
  return reg;
}

std::optional<Registration> CentralController::Find(std::string const& name) const {
  std::lock_guard lock(mu_);
  auto it = entities_.find(name);
  if (it == entities_.end()) return std::nullopt;
  return it->second;
}

json MakeNotification(std::string const& text, std::string const& event_time) {
  return {{"message", text}, {"myEvent", event_time}};
}

void Inbox::Append(Delivery d) {
  std::lock_guard lock(mu_);
  items_.push_back(std::move(d));
}

std::vector<Delivery> Inbox::Snapshot() const {
  std::lock_guard lock(mu_);
  return items_;
}

std::size_t Inbox::size() const {
  std::lock_guard lock(mu_);
  return items_.size();
}

std::string_view ToString(Outcome o) {
  switch (o) {
    case Outcome::kNotified: return "notified";
    case Outcome::kBlocked: return "blocked";
    case Outcome::kDropped: return "dropped";
  }
  return "?";
}

Cloudlet::Cloudlet(std::string name, alerts::AlertRuleSet const& rules)
    : name_(std::move(name)),
      rogues_(rules.initial_rogues()),
      window_(rules.window_seconds()) {
  for (auto const* t : {alerts::kDevicesTopic, alerts::kMedicalTopic,
                        alerts::kPoliceTopic, alerts::kRogueTopic}) {
    topics_[t];
  }
}

std::set<std::string> Cloudlet::Members() const {
  std::lock_guard lock(mu_);
  return members_;
}

std::set<std::string> Cloudlet::Topics() const {
  std::lock_guard lock(mu_);
  std::set<std::string> out;
  for (auto const& [t, subs] : topics_) out.insert(t);
  return out;
}

std::set<std::string> Cloudlet::Subscribers(std::string const& topic) const {
  std::lock_guard lock(mu_);
  auto it = topics_.find(topic);
  if (it == topics_.end()) throw Error(ErrorCode::kUnknownTopic, topic);
  return it->second;
}

CloudletStats Cloudlet::Stats() const {
  CloudletStats s;
  {
    std::lock_guard lock(mu_);
    s = stats_;
  }
  std::lock_guard lock(queue_mu_);
  s.queued = queue_.size();
  s.queued_bytes = queued_bytes_;
  s.queue_overflow = overflowed_;
  return s;
}

std::set<std::string> Cloudlet::Rogues() const {
  std::lock_guard lock(mu_);
  return rogues_.names();
}

Broker::Broker(SharedAttributeStore& store, policy::PolicySet const& policies,
               alerts::AlertRuleSet const& rules, CentralController& controller,
               BrokerOptions options)
    : store_(store),
      policies_(policies),
      rules_(rules),
      controller_(controller),
      options_(std::move(options)),
      epoch_(Clock::now()) {
  policies_.Get("send");
  policies_.Get("forward");
}

Broker::~Broker() = default;

double Broker::Now() const {
  if (options_.clock) return options_.clock();
  return std::chrono::duration<double>(Clock::now() - epoch_).count();
}

void Broker::Emit(json const& event) const {
  if (options_.on_event) options_.on_event(event);
}

Cloudlet& Broker::AddCloudlet(std::string const& name) {
  std::unique_lock lock(cloudlets_mu_);
  if (cloudlets_.count(name)) {
    throw Error(ErrorCode::kDuplicateName, "cloudlet " + name + " already exists");
  }
  store_.Write([&](AttributeStore& s) {
    auto id = EntityId::Cloudlet(name);
    if (!s.HasEntity(id)) s.AddEntity(id);
  });
  auto& c = cloudlets_[name];
  c.reset(new Cloudlet(name, rules_));
  return *c;
}

Cloudlet& Broker::GetCloudlet(std::string const& name) {
  std::shared_lock lock(cloudlets_mu_);
  auto it = cloudlets_.find(name);
  if (it == cloudlets_.end()) {
    throw Error(ErrorCode::kUnknownEntity, "unknown cloudlet " + name);
  }
  return *it->second;
}

bool Broker::HasCloudlet(std::string const& name) const {
  std::shared_lock lock(cloudlets_mu_);
  return cloudlets_.count(name) > 0;
}

std::vector<std::string> Broker::CloudletNames() const {
  std::shared_lock lock(cloudlets_mu_);
  std::vector<std::string> out;
  for (auto const& [n, c] : cloudlets_) out.push_back(n);
  return out;
}

EntityId Broker::EnsureEntity(Registration const& reg) {
  return store_.Write([&](AttributeStore& s) {
    EntityId id{CentralController::KindOf(reg.type), reg.name};
    if (!s.HasEntity(id)) {
      s.AddEntity(id);
      if (s.HasAttribute("type")) {
        auto const& schema = s.Schema("type");
        Atom value(reg.type);
        if (schema.type == AttributeType::kAtomic &&
            std::find(schema.range.begin(), schema.range.end(), value) !=
                schema.range.end()) {
          s.SetAtomic(id, "type", value);
        }
      }
    }
    return id;
  });
}

void Broker::Join(std::string const& entity, std::string const& cloudlet) {
  auto reg = controller_.Find(entity);
  if (!reg) throw Error(ErrorCode::kNotRegistered, entity + " is not registered");
  auto& c = GetCloudlet(cloudlet);
  std::lock_guard lock(c.mu_);
  if (c.members_.count(entity)) return;
  if (c.members_.size() >= options_.max_members) {
    throw Error(ErrorCode::kCapacityExceeded,
                cloudlet + " already has " + std::to_string(c.members_.size()) + " members");
  }
  auto id = EnsureEntity(*reg);
  store_.Write([&](AttributeStore& s) { s.Associate(id, EntityId::Cloudlet(cloudlet)); });
  c.members_.insert(entity);
  c.topics_[ShadowTopic(entity)];
  c.topics_[alerts::kDevicesTopic].insert(entity);
  if (reg->type == "Police") c.topics_[alerts::kPoliceTopic].insert(entity);
  if (reg->type == "Medical") c.topics_[alerts::kMedicalTopic].insert(entity);
  MutableInbox(entity);
}

void Broker::Leave(std::string const& entity, std::string const& cloudlet) {
  auto& c = GetCloudlet(cloudlet);
  std::lock_guard lock(c.mu_);
  if (!c.members_.erase(entity)) return;
  c.topics_.erase(ShadowTopic(entity));
  for (auto& [t, subs] : c.topics_) subs.erase(entity);
  store_.Write([&](AttributeStore& s) {
    auto id = IdOf(entity, s);
    s.Dissociate(id, EntityId::Cloudlet(cloudlet));
  });
}

bool Broker::IsMember(std::string const& entity, std::string const& cloudlet) const {
  std::shared_lock lock(cloudlets_mu_);
  auto it = cloudlets_.find(cloudlet);
  if (it == cloudlets_.end()) return false;
  std::lock_guard clock(it->second->mu_);
  return it->second->members_.count(entity) > 0;
}

std::vector<std::string> Broker::MembershipsOf(std::string const& entity) const {
  std::vector<std::string> out;
  for (auto const& name : CloudletNames()) {
    if (IsMember(entity, name)) out.push_back(name);
  }
  return out;
}

void Broker::Subscribe(std::string const& entity, std::string const& cloudlet,
                       std::string const& topic) {
  auto& c = GetCloudlet(cloudlet);
  std::lock_guard lock(c.mu_);
  if (!c.members_.count(entity)) {
    throw Error(ErrorCode::kNotMember, entity + " is not a member of " + cloudlet);
  }
  auto it = c.topics_.find(topic);
  if (it == c.topics_.end()) throw Error(ErrorCode::kUnknownTopic, topic);
  it->second.insert(entity);
}

std::uint64_t Broker::Submit(std::string const& sender, std::string const& cloudlet,
                             std::string const& topic, json payload) {
  auto& c = GetCloudlet(cloudlet);
  {
    std::lock_guard lock(c.mu_);
    if (!c.members_.count(sender)) {
      throw Error(ErrorCode::kNotMember, sender + " is not a member of " + cloudlet);
    }
  }
  if (topic != ShadowTopic(sender)) {
    throw Error(ErrorCode::kUnauthorized, sender + " may not publish on " + topic);
  }
  auto bytes = payload.dump().size();
  if (bytes > options_.queue_capacity) {
    throw Error(ErrorCode::kQueueOverflow, "message of " + std::to_string(bytes) +
                                               " bytes exceeds the queue capacity");
  }
  std::uint64_t id;
  {
    std::lock_guard lock(id_mu_);
    id = next_id_++;
  }
  Cloudlet::Pending p{id, sender, topic, std::move(payload), bytes, Now(), Clock::now()};
  std::lock_guard lock(c.queue_mu_);
  while (c.queued_bytes_ + bytes > options_.queue_capacity) {
    c.queued_bytes_ -= c.queue_.front().bytes;
    c.evicted_.push_back(std::move(c.queue_.front()));
    c.queue_.pop_front();
    ++c.overflowed_;
  }
  c.queued_bytes_ += bytes;
  c.queue_.push_back(std::move(p));
  return id;
}

std::vector<PipelineResult> Broker::Drain(std::string const& cloudlet) {
  auto& c = GetCloudlet(cloudlet);
  std::lock_guard lock(c.mu_);
  std::vector<PipelineResult> results;
  for (;;) {
    Cloudlet::Pending p;
    bool evicted = false;
    {
      std::lock_guard qlock(c.queue_mu_);
      if (!c.evicted_.empty()) {
        p = std::move(c.evicted_.front());
        c.evicted_.pop_front();
        evicted = true;
      } else if (!c.queue_.empty()) {
        p = std::move(c.queue_.front());
        c.queue_.pop_front();
        c.queued_bytes_ -= p.bytes;
      } else {
        break;
      }
    }
    PipelineResult r;
    r.message_id = p.id;
    r.sender = p.sender;
    r.cloudlet = c.name_;
    r.received_at = p.received_at;
    ++c.stats_.attempted;
    if (evicted) {
      r.outcome = Outcome::kDropped;
      r.error = ErrorCode::kQueueOverflow;
      r.reason = "evicted from a full queue";
      ++c.stats_.dropped;
    } else {
      RunPipeline(c, p, r);
    }
    if (options_.on_result) options_.on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

void Broker::RunPipeline(Cloudlet& c, Cloudlet::Pending& p, PipelineResult& r) {
  auto start = Clock::now();
  auto finish = [&](Outcome o, std::optional<ErrorCode> e, std::string reason) {
    r.outcome = o;
    r.error = e;
    r.reason = std::move(reason);
    auto& s = c.stats_;
    ++(o == Outcome::kNotified ? s.notified : o == Outcome::kBlocked ? s.blocked : s.dropped);
    r.pipeline_us = Micros(start, Clock::now());
  };
  auto timed = [&](auto&& f) {
    auto c0 = ThreadCpuMicros();
    auto t0 = Clock::now();
    auto v = f();
    r.policy_us += Micros(t0, Clock::now());
    r.policy_cpu_us += ThreadCpuMicros() - c0;
    return v;
  };
  auto const tc = EntityId::Cloudlet(c.name_);

  // (1) send authorization and system-wide policies.
  EntityId sender;
  std::string source_type;
  try {
    bool allowed = timed([&] {
      return store_.Read([&](AttributeStore const& s) {
        sender = IdOf(p.sender, s);
        if (s.HasAttribute("type") && s.Schema("type").type == AttributeType::kAtomic) {
          if (auto t = s.EffectiveAtomic(sender, "type")) source_type = t->ToString();
        }
        return policies_.Authorize("send", {sender, tc}, s) && policies_.SystemWideHolds(s);
      });
    });
    if (!allowed) return finish(Outcome::kBlocked, ErrorCode::kSendDenied, "send denied");
  } catch (Error const& e) {
    return finish(Outcome::kBlocked, e.code(), e.what());
  }

  BsmMessage msg;
  try {
    msg = BsmMessage::FromJson(p.payload);
  } catch (Error const& e) {
    return finish(Outcome::kDropped, e.code(), e.what());
  }
  msg.sender = p.sender;
  msg.topic = p.topic;
  msg.received_at = p.received_at;
  r.message = msg;

  // (2)-(4) rogue check, null alerts, rule decision.
  try {
    r.decision = alerts::ClassifyAndDecide(msg, c.window_, rules_, c.rogues_, source_type);
  } catch (Error const& e) {
    return finish(Outcome::kDropped, e.code(), e.what());
  }
  switch (r.decision.kind) {
    case alerts::Decision::Kind::kRogueDetected:
      Emit({{"event", "rogue_detected"},
            {"cloudlet", c.name_},
            {"vehicle", p.sender},
            {"latitude", msg.latitude},
            {"longitude", msg.longitude},
            {"time", msg.time},
            {"at", p.received_at},
            {"message_id", p.id}});
      return finish(Outcome::kBlocked, std::nullopt, "rogue sender");
    case alerts::Decision::Kind::kLogOnly:
      return finish(Outcome::kDropped, std::nullopt, "no alert");
    case alerts::Decision::Kind::kDrop:
      return finish(Outcome::kDropped, std::nullopt, "no matching rule");
    case alerts::Decision::Kind::kNotify:
      break;
  }

  // (5)-(6) anonymize and authorize forward for every subscriber, then
  // deliver, so the last delivery closes the pipeline.
  std::vector<std::pair<std::string, json>> outgoing;
  std::vector<std::string> topics;
  for (auto const& notice : r.decision.notices) {
    auto payload = MakeNotification(notice.text, msg.time);
    if (rules_.include_identity() && r.decision.alert == alerts::AlertType::kAccident &&
        notice.topic == alerts::kPoliceTopic) {
      payload["vehicle"] = p.sender;
    }
    for (auto const& v : c.topics_[notice.topic]) {
      if (v == p.sender) continue;
      bool allowed = false;
      try {
        allowed = timed([&] {
          return store_.Read([&](AttributeStore const& s) {
            return policies_.Authorize("forward", {tc, IdOf(v, s)}, s);
          });
        });
      } catch (Error const&) {
        allowed = false;
      }
      if (!allowed) {
        ++r.forward_denied;
        ++c.stats_.forward_denied;
        continue;
      }
      outgoing.emplace_back(v, payload);
      topics.push_back(notice.topic);
    }
  }
  double const at = Now();
  for (std::size_t i = 0; i < outgoing.size(); ++i) {
    auto& [v, payload] = outgoing[i];
    Delivery d{p.id, v, c.name_, topics[i], std::move(payload), at, Clock::now()};
    MutableInbox(v).Append(d);
    if (options_.on_delivery) options_.on_delivery(d);
    ++c.stats_.deliveries;
    r.deliveries.push_back(std::move(d));
  }
  finish(Outcome::kNotified, std::nullopt, "notified");
  if (!r.deliveries.empty()) {
    auto last = r.deliveries.back().wall;
    r.pipeline_us = Micros(start, last);
    r.trip_us = Micros(p.submitted, last);
  }
}

PipelineResult Broker::PublishTo(std::string const& sender, std::string const& cloudlet,
                                 std::string const& topic, json payload) {
  auto id = Submit(sender, cloudlet, topic, std::move(payload));
  for (auto& r : Drain(cloudlet)) {
    if (r.message_id == id) return std::move(r);
  }
  PipelineResult r;
  r.message_id = id;
  r.sender = sender;
  r.cloudlet = cloudlet;
  r.reason = "processed by a concurrent drain";
  return r;
}

std::vector<PipelineResult> Broker::Publish(std::string const& sender,
                                            std::string const& topic,
                                            json const& payload) {
  if (topic == alerts::kRogueTopic) {
    UpdateRogues(sender, payload);
    return {};
  }
  auto cloudlets = MembershipsOf(sender);
  if (cloudlets.empty()) {
    throw Error(ErrorCode::kNotMember, sender + " is not a member of any cloudlet");
  }
  std::vector<PipelineResult> out;
  for (auto const& c : cloudlets) out.push_back(PublishTo(sender, c, topic, payload));
  return out;
}

std::vector<Delivery> Broker::Deliver(std::string const& cloudlet, std::string const& topic,
                                      json const& notification) {
  auto& c = GetCloudlet(cloudlet);
  std::lock_guard lock(c.mu_);
  auto it = c.topics_.find(topic);
  if (it == c.topics_.end()) throw Error(ErrorCode::kUnknownTopic, topic);
  std::vector<Delivery> out;
  for (auto const& v : it->second) {
    Delivery d{0, v, cloudlet, topic, notification, Now(), Clock::now()};
    MutableInbox(v).Append(d);
    if (options_.on_delivery) options_.on_delivery(d);
    out.push_back(std::move(d));
  }
  return out;
}

json Broker::UpdateRogues(std::string const& publisher, json const& command,
                          std::vector<std::string> const& cloudlets) {
  auto cmd = alerts::ParseRogueCommand(command);
  auto reg = controller_.Find(publisher);
  if (!reg) throw Error(ErrorCode::kNotRegistered, publisher + " is not registered");
  auto pub = EnsureEntity(*reg);
  auto targets = cloudlets.empty() ? CloudletNames() : cloudlets;
  json responses = json::object();
  for (auto const& name : targets) {
    auto& c = GetCloudlet(name);
    std::lock_guard lock(c.mu_);
    bool allowed = false;
    if (policies_.Find("update_rogue")) {
      try {
        allowed = store_.Read([&](AttributeStore const& s) {
          return policies_.Authorize("update_rogue", {pub, EntityId::Cloudlet(name)}, s);
        });
      } catch (Error const&) {
        allowed = false;
      }
    }
    if (!allowed) continue;
    auto resp = alerts::ApplyRogueUpdate(cmd, c.rogues_);
    responses[name] = {{"Vehicles", resp["Vehicles"]}, {"revision", resp["revision"]}};
    if (cmd.op != alerts::RogueCommand::Op::kList) {
      Emit({{"event", "rogue_update"},
            {"cloudlet", name},
            {"publisher", publisher},
            {"command", command},
            {"revision", resp["revision"]},
            {"at", Now()}});
    }
  }
  if (responses.empty()) {
    throw Error(ErrorCode::kUnauthorized, publisher + " may not update rogue lists");
  }
  auto op = cmd.op == alerts::RogueCommand::Op::kAdd      ? "ADD"
            : cmd.op == alerts::RogueCommand::Op::kDelete ? "DELETE"
                                                          : "LIST";
  return {{"Alert", op}, {"myVehicle", nullptr}, {"cloudlets", responses}};
}

EntityId Broker::IdOf(std::string const& name, AttributeStore const& store) const {
  if (auto reg = controller_.Find(name)) {
    return {CentralController::KindOf(reg->type), name};
  }
  return store.Resolve(name);
}

Inbox& Broker::MutableInbox(std::string const& entity) {
  {
    std::shared_lock lock(inbox_mu_);
    auto it = inboxes_.find(entity);
    if (it != inboxes_.end()) return *it->second;
  }
  std::unique_lock lock(inbox_mu_);
  auto& slot = inboxes_[entity];
  if (!slot) slot = std::make_unique<Inbox>();
  return *slot;
}

Inbox const& Broker::InboxOf(std::string const& entity) const {
  static Inbox const empty;
  std::shared_lock lock(inbox_mu_);
  auto it = inboxes_.find(entity);
  return it == inboxes_.end() ? empty : *it->second;
}

bool Communicate(policy::PolicySet const& policies, AttributeStore const& store,
                 EntityId const& source, EntityId const& target) {
  auto const sc = store.AssociatedCloudlets(source);
  auto const tcs = store.AssociatedCloudlets(target);
  for (auto const& tc : sc) {
    if (!tcs.count(tc)) continue;
    if (policies.Authorize("send", {source, tc}, store) &&
        policies.Authorize("forward", {tc, target}, store)) {
      return policies.SystemWideHolds(store);
    }
  }
  return false;
}

}  // namespace cits::broker
