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

#ifndef CITS_ALERT_RULES_H
#define CITS_ALERT_RULES_H

#include "cits/bsm.h"
#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace cits::alerts {

inline constexpr char kDevicesTopic[] = "test/devices";
inline constexpr char kMedicalTopic[] = "test/medical";
inline constexpr char kPoliceTopic[] = "test/police";
inline constexpr char kRogueTopic[] = "test/Rogue-Vehicle";

enum class AlertType { kNull, kTireSlip, kAccident };

/// Case-insensitive. Absent, "", "Null" and "None" map to kNull.
/// Throws kUnknownAlertType for anything else.
AlertType ParseAlertType(std::optional<std::string> const& text);
std::string_view ToString(AlertType t);

struct AlertRule {
  AlertType type = AlertType::kTireSlip;
  std::set<std::string> sources;  // empty matches every source type
  int min_reporters = 1;
  std::optional<int> max_reporters;
  std::string text;
  std::vector<std::string> topics;

  bool Matches(std::string const& source_type, int reporters) const;
};

/// Rule table loaded from JSON:
///
///   {
///     "TireSlip": [{"Source": ["Vehicle"], "Number": {"min": 1, "max": 1},
///                   "Notification": "Ice Threat - Low",
///                   "Topics": ["test/devices"]}, ...],
///     "Accident": [{"Source": "*", ...}],
///     "Rogue":    {"Vehicles": ["Car-X", "Car-Y", "Vehicle-Z"]},
///     "WindowSeconds": 10,
///     "IncludeIdentity": false
///   }
class AlertRuleSet {
 public:
  AlertRuleSet() = default;

  /// Validates that topics are declared and that no two rules of one alert
  /// type overlap in both source types and reporter range. kInvalidRules.
  static AlertRuleSet FromJson(nlohmann::json const& doc);
  static AlertRuleSet FromFile(std::string const& path);
  /// The stock table: Low/High ice threat and accident routing.
  static AlertRuleSet Default();

  nlohmann::json ToJson() const;

  /// The unique rule for the inputs, or nullptr.
  AlertRule const* Match(AlertType type, std::string const& source_type,
                         int reporters) const;

  std::vector<AlertRule> const& rules() const { return rules_; }
  std::vector<std::string> const& initial_rogues() const { return rogues_; }
  double window_seconds() const { return window_seconds_; }
  bool include_identity() const { return include_identity_; }
  void set_include_identity(bool v) { include_identity_ = v; }

  static std::set<std::string> const& DeclaredTopics();

 private:
  void Validate() const;

  std::vector<AlertRule> rules_;
  std::vector<std::string> rogues_;
  double window_seconds_ = 10;
  bool include_identity_ = false;
};

/// Distinct reporters per alert type over a sliding window. A reporter
/// counts once; its latest report time decides when it leaves the window.
class AlertWindow {
 public:
  explicit AlertWindow(double window_seconds = 10);

  /// Evicts, records the report, and returns the distinct count.
  int Record(AlertType type, std::string const& reporter, double now);
  /// Drops entries with now - t > W.
  void Evict(double now);
  int Count(AlertType type, double now);

  double window_seconds() const { return window_; }

 private:
  double window_;
  std::map<AlertType, std::map<std::string, double>> latest_;
};

class RogueList {
 public:
  RogueList() = default;
  explicit RogueList(std::vector<std::string> const& names);

  bool Contains(std::string const& name) const { return names_.count(name); }
  void Add(std::string const& name);
  void Remove(std::string const& name);

  std::set<std::string> const& names() const { return names_; }
  std::uint64_t revision() const { return revision_; }

 private:
  std::set<std::string> names_;
  std::uint64_t revision_ = 0;
};

struct RogueCommand {
  enum class Op { kAdd, kDelete, kList };
  Op op = Op::kList;
  std::vector<std::string> vehicles;
};

/// {"Alert": "ADD"|"DELETE"|"LIST", "myVehicle": name | [names] | null}.
/// Throws kMalformedCommand.
RogueCommand ParseRogueCommand(nlohmann::json const& j);

/// Applies the command and returns the response document.
nlohmann::json ApplyRogueUpdate(RogueCommand const& cmd, RogueList& rogues);

struct Notice {
  std::string topic;
  std::string text;

  bool operator==(Notice const&) const = default;
};

struct Decision {
  enum class Kind { kDrop, kLogOnly, kNotify, kRogueDetected };
  Kind kind = Kind::kDrop;
  AlertType alert = AlertType::kNull;
  std::vector<Notice> notices;
  int reporters = 0;
};

std::string_view ToString(Decision::Kind k);

/// Maps one inbound message to a routing decision. `source_type` is the
/// sender's effective "type" attribute. Records the report in `window` at
/// msg.received_at. Throws kUnknownAlertType.
Decision ClassifyAndDecide(BsmMessage const& msg, AlertWindow& window,
                           AlertRuleSet const& rules, RogueList const& rogues,
                           std::string const& source_type);

}  // namespace cits::alerts

#endif  // CITS_ALERT_RULES_H
