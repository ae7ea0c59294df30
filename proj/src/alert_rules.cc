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
#include "cits/store_config.h"
#include <algorithm>
#include <cctype>
#include <limits>

namespace cits::alerts {
namespace {

using nlohmann::json;

[[noreturn]] void Invalid(std::string const& what) {
  throw Error(ErrorCode::kInvalidRules, what);
}

[[noreturn]] void Malformed(std::string const& what) {
  throw Error(ErrorCode::kMalformedCommand, what);
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::set<std::string> SourcesFromJson(json const& j, std::string const& path) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "*") return {};
    return {s};
  }
  if (!j.is_array() || j.empty()) {
    Invalid(path + ": expected \"*\", a name or a non-empty list");
  }
  std::set<std::string> out;
  for (auto const& e : j) {
    if (!e.is_string()) Invalid(path + ": source types are strings");
    if (e.get<std::string>() == "*") return {};
    out.insert(e.get<std::string>());
  }
  return out;
}

AlertRule RuleFromJson(AlertType type, json const& j, std::string const& path) {
  if (!j.is_object()) Invalid(path + ": expected an object");
  AlertRule r;
  r.type = type;
  for (auto const& [key, value] : j.items()) {
    if (key == "Source") {
      r.sources = SourcesFromJson(value, path + ".Source");
    } else if (key == "Number") {
      if (value.is_number_integer()) {
        r.min_reporters = value.get<int>();
        r.max_reporters = r.min_reporters;
      } else if (value.is_object()) {
        for (auto const& [k, v] : value.items()) {
          if (!v.is_number_integer()) Invalid(path + ".Number." + k + ": expected an integer");
          if (k == "min") {
            r.min_reporters = v.get<int>();
          } else if (k == "max") {
            r.max_reporters = v.get<int>();
          } else {
            Invalid(path + ".Number: unknown key " + k);
          }
        }
      } else {
        Invalid(path + ".Number: expected an integer or {min, max}");
      }
    } else if (key == "Notification") {
      if (!value.is_string() || value.get<std::string>().empty()) {
        Invalid(path + ".Notification: expected a non-empty string");
      }
      r.text = value.get<std::string>();
    } else if (key == "Topics") {
      if (!value.is_array() || value.empty()) {
        Invalid(path + ".Topics: expected a non-empty list");
      }
      for (auto const& t : value) {
        if (!t.is_string()) Invalid(path + ".Topics: topics are strings");
        r.topics.push_back(t.get<std::string>());
      }
    } else {
      Invalid(path + ": unknown key " + key);
    }
  }
  if (r.text.empty()) Invalid(path + ": missing Notification");
  if (r.topics.empty()) Invalid(path + ": missing Topics");
  if (r.min_reporters < 1) Invalid(path + ".Number: min must be at least 1");
  if (r.max_reporters && *r.max_reporters < r.min_reporters) {
    Invalid(path + ".Number: max below min");
  }
  return r;
}

bool SourcesOverlap(AlertRule const& a, AlertRule const& b) {
  if (a.sources.empty() || b.sources.empty()) return true;
  return std::any_of(a.sources.begin(), a.sources.end(),
                     [&](auto const& s) { return b.sources.count(s) > 0; });
}

bool RangesOverlap(AlertRule const& a, AlertRule const& b) {
  constexpr int kInf = std::numeric_limits<int>::max();
  int lo = std::max(a.min_reporters, b.min_reporters);
  int hi = std::min(a.max_reporters.value_or(kInf), b.max_reporters.value_or(kInf));
  return lo <= hi;
}

}  // namespace

AlertType ParseAlertType(std::optional<std::string> const& text) {
  if (!text) return AlertType::kNull;
  auto s = Lower(*text);
  if (s.empty() || s == "null" || s == "none") return AlertType::kNull;
  if (s == "tireslip") return AlertType::kTireSlip;
  if (s == "accident") return AlertType::kAccident;
  throw Error(ErrorCode::kUnknownAlertType, "unknown alert type: " + *text);
}

std::string_view ToString(AlertType t) {
  switch (t) {
    case AlertType::kNull: return "Null";
    case AlertType::kTireSlip: return "TireSlip";
    case AlertType::kAccident: return "Accident";
  }
  return "?";
}

std::string_view ToString(Decision::Kind k) {
  switch (k) {
    case Decision::Kind::kDrop: return "Drop";
    case Decision::Kind::kLogOnly: return "LogOnly";
    case Decision::Kind::kNotify: return "Notify";
    case Decision::Kind::kRogueDetected: return "RogueDetected";
  }
  return "?";
}

bool AlertRule::Matches(std::string const& source_type, int reporters) const {
  if (!sources.empty() && !sources.count(source_type)) return false;
  if (reporters < min_reporters) return false;
  return !max_reporters || reporters <= *max_reporters;
}

std::set<std::string> const& AlertRuleSet::DeclaredTopics() {
  static std::set<std::string> const topics = {kDevicesTopic, kMedicalTopic,
                                               kPoliceTopic};
  return topics;
}

AlertRuleSet AlertRuleSet::FromJson(json const& doc) {
  if (!doc.is_object()) Invalid("rules: expected an object");
  AlertRuleSet set;
  for (auto const& [key, value] : doc.items()) {
    if (key == "TireSlip" || key == "Accident") {
      auto type = key == "TireSlip" ? AlertType::kTireSlip : AlertType::kAccident;
      if (!value.is_array()) Invalid(key + ": expected a list of rules");
      for (std::size_t i = 0; i < value.size(); ++i) {
        set.rules_.push_back(
            RuleFromJson(type, value[i], key + "[" + std::to_string(i) + "]"));
      }
    } else if (key == "Rogue") {
      auto vehicles = value.is_object() ? value.find("Vehicles") : value.end();
      if (!value.is_object() || vehicles == value.end() ||
          !vehicles->is_array() || value.size() != 1) {
        Invalid("Rogue: expected {\"Vehicles\": [...]}");
      }
      for (auto const& v : *vehicles) {
        if (!v.is_string() || v.get<std::string>().empty()) {
          Invalid("Rogue.Vehicles: expected non-empty names");
        }
        set.rogues_.push_back(v.get<std::string>());
      }
    } else if (key == "WindowSeconds") {
      if (!value.is_number() || !(value.get<double>() > 0)) {
        Invalid("WindowSeconds: expected a positive number");
      }
      set.window_seconds_ = value.get<double>();
    } else if (key == "IncludeIdentity") {
      if (!value.is_boolean()) Invalid("IncludeIdentity: expected a boolean");
      set.include_identity_ = value.get<bool>();
    } else {
      Invalid("unknown key " + key);
    }
  }
  set.Validate();
  return set;
}

AlertRuleSet AlertRuleSet::FromFile(std::string const& path) {
  try {
    return FromJson(ReadJsonFile(path));
  } catch (Error const& e) {
    if (e.code() != ErrorCode::kInvalidRules) throw;
    throw Error(ErrorCode::kInvalidRules, path + ": " + e.what());
  }
}

AlertRuleSet AlertRuleSet::Default() {
  return FromJson(json::parse(R"({
    "TireSlip": [
      {"Source": ["Vehicle"], "Number": {"min": 1, "max": 1},
       "Notification": "Ice Threat - Low", "Topics": ["test/devices"]},
      {"Source": ["Vehicle"], "Number": {"min": 2},
       "Notification": "Ice-threat High", "Topics": ["test/devices"]},
      {"Source": ["Police", "Medical"], "Number": {"min": 1},
       "Notification": "Ice-threat High", "Topics": ["test/devices"]}
    ],
    "Accident": [
      {"Source": "*", "Notification": "Accident- Require Assistance",
       "Topics": ["test/medical", "test/police"]}
    ],
    "Rogue": {"Vehicles": ["Car-X", "Car-Y", "Vehicle-Z"]}
  })"));
}

void AlertRuleSet::Validate() const {
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    for (auto const& t : rules_[i].topics) {
      if (!DeclaredTopics().count(t)) Invalid("undeclared topic " + t);
    }
    for (std::size_t j = 0; j < i; ++j) {
      auto const& a = rules_[j];
      auto const& b = rules_[i];
      if (a.type == b.type && SourcesOverlap(a, b) && RangesOverlap(a, b)) {
        Invalid(std::string(ToString(a.type)) + " rules " + std::to_string(j) +
                " and " + std::to_string(i) + " overlap");
      }
    }
  }
}

json AlertRuleSet::ToJson() const {
  json doc = json::object();
  for (auto const& r : rules_) {
    json j;
    if (r.sources.empty()) {
      j["Source"] = "*";
    } else {
      j["Source"] = r.sources;
    }
    j["Number"] = {{"min", r.min_reporters}};
    if (r.max_reporters) j["Number"]["max"] = *r.max_reporters;
    j["Notification"] = r.text;
    j["Topics"] = r.topics;
    doc[std::string(ToString(r.type))].push_back(j);
  }
  doc["Rogue"] = {{"Vehicles", rogues_}};
  doc["WindowSeconds"] = window_seconds_;
  doc["IncludeIdentity"] = include_identity_;
  return doc;
}

AlertRule const* AlertRuleSet::Match(AlertType type,
                                     std::string const& source_type,
                                     int reporters) const {
  for (auto const& r : rules_) {
    if (r.type == type && r.Matches(source_type, reporters)) return &r;
  }
  return nullptr;
}

AlertWindow::AlertWindow(double window_seconds) : window_(window_seconds) {}

void AlertWindow::Evict(double now) {
  for (auto& [type, reporters] : latest_) {
    std::erase_if(reporters, [&](auto const& e) { return now - e.second > window_; });
  }
}

int AlertWindow::Record(AlertType type, std::string const& reporter, double now) {
  Evict(now);
  auto& t = latest_[type][reporter];
  t = std::max(t, now);
  return int(latest_[type].size());
}

int AlertWindow::Count(AlertType type, double now) {
  Evict(now);
  auto it = latest_.find(type);
  return it == latest_.end() ? 0 : int(it->second.size());
}

RogueList::RogueList(std::vector<std::string> const& names)
    : names_(names.begin(), names.end()) {}

void RogueList::Add(std::string const& name) {
  names_.insert(name);
  ++revision_;
}

void RogueList::Remove(std::string const& name) {
  names_.erase(name);
  ++revision_;
}

RogueCommand ParseRogueCommand(json const& j) {
  if (!j.is_object()) Malformed("command is not an object");
  auto op = j.find("Alert");
  if (op == j.end() || !op->is_string()) Malformed("missing Alert");
  RogueCommand cmd;
  auto const& name = op->get_ref<std::string const&>();
  if (name == "ADD") {
    cmd.op = RogueCommand::Op::kAdd;
  } else if (name == "DELETE") {
    cmd.op = RogueCommand::Op::kDelete;
  } else if (name == "LIST") {
    cmd.op = RogueCommand::Op::kList;
  } else {
    Malformed("unknown operation " + name);
  }
  auto v = j.find("myVehicle");
  bool null = v == j.end() || v->is_null();
  if (cmd.op == RogueCommand::Op::kList) {
    if (!null) Malformed("LIST takes myVehicle = null");
    return cmd;
  }
  if (null) Malformed(name + " needs myVehicle");
  auto take = [&](json const& e) {
    if (!e.is_string() || e.get<std::string>().empty()) {
      Malformed("myVehicle entries are non-empty names");
    }
    cmd.vehicles.push_back(e.get<std::string>());
  };
  if (v->is_array()) {
    if (v->empty()) Malformed("myVehicle is empty");
    for (auto const& e : *v) take(e);
  } else {
    take(*v);
  }
  return cmd;
}

json ApplyRogueUpdate(RogueCommand const& cmd, RogueList& rogues) {
  char const* op = "LIST";
  if (cmd.op == RogueCommand::Op::kAdd) {
    op = "ADD";
    for (auto const& v : cmd.vehicles) rogues.Add(v);
  } else if (cmd.op == RogueCommand::Op::kDelete) {
    op = "DELETE";
    for (auto const& v : cmd.vehicles) rogues.Remove(v);
  }
  return {{"Alert", op},
          {"myVehicle", nullptr},
          {"Vehicles", rogues.names()},
          {"revision", rogues.revision()}};
}

Decision ClassifyAndDecide(BsmMessage const& msg, AlertWindow& window,
                           AlertRuleSet const& rules, RogueList const& rogues,
                           std::string const& source_type) {
  Decision d;
  if (rogues.Contains(msg.sender)) {
    d.kind = Decision::Kind::kRogueDetected;
    return d;
  }
  d.alert = ParseAlertType(msg.alert);
  if (d.alert == AlertType::kNull) {
    d.kind = Decision::Kind::kLogOnly;
    return d;
  }
  d.reporters = window.Record(d.alert, msg.sender, msg.received_at);
  auto const* rule = rules.Match(d.alert, source_type, d.reporters);
  if (!rule) {
    d.kind = Decision::Kind::kDrop;
    return d;
  }
  d.kind = Decision::Kind::kNotify;
  for (auto const& t : rule->topics) d.notices.push_back({t, rule->text});
  return d;
}

}  // namespace cits::alerts
