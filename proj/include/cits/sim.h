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

#ifndef CITS_SIM_H
#define CITS_SIM_H

#include "cits/broker.h"
#include "cits/geo.h"
#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cits::sim {

inline constexpr int kMaxVehiclesPerCloudlet = 50;
inline constexpr double kMinRate = 1;
inline constexpr double kMaxRate = 20;
inline constexpr double kMaxDuration = 3600;

struct VehicleSpec {
  std::string name;
  std::string type = "Vehicle";
  std::vector<geo::LatLon> path;  // one waypoint means parked
  double speed_mps = 0;
  std::optional<double> rate_hz;  // defaults to the cell's rate
};

struct ScriptedAlert {
  double time = 0;
  std::string vehicle;
  std::optional<std::string> alert;
};

struct ScriptedRogueUpdate {
  double time = 0;
  std::string publisher;
  nlohmann::json command;
  std::vector<std::string> cloudlets;  // empty means every cloudlet
};

/// Scenario file layout (paths resolve against the file's directory):
///
///   {"name": "tire-slip", "seed": 7, "duration_s": 20,
///    "world": "../world.json", "policies": "../policies.auth",
///    "rules": "../rules.json",
///    "regions": [...] | "grid": {"south_west": [lat, lon], "rows": 2,
///                                "cols": 2, "cell_deg": [dlat, dlon]},
///    "vehicles_per_cloudlet": [10, 50], "rates": [1, 20],
///    "fleet": {"types": {"Vehicle": 8, "Police": 1, "Medical": 1},
///              "speed_mps": [5, 20], "waypoints": 3},
///    "random_alerts": {"probability": 0.01,
///                      "types": {"Tireslip": 3, "Accident": 1}},
///    "vehicles": [{"name": .., "type": .., "path": [[lat, lon], ..],
///                  "speed_mps": .., "rate_hz": ..}],
///    "alerts": [{"time": 2.5, "vehicle": "tc1-car1", "alert": "Tireslip"}],
///    "rogue_updates": [{"time": 5, "publisher": "Authority",
///                       "command": {"Alert": "ADD", "myVehicle": "x"},
///                       "cloudlets": ["tc1"]}]}
///
/// Generated vehicles are named <cloudlet>-car<k> (k from 1) and start
/// inside their home cloudlet. Every (vehicles_per_cloudlet, rate) pair is
/// one cell, run from a fresh world.
struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  double duration_s = 10;
  std::string world_path;
  std::string policies_path;
  std::string rules_path;
  std::vector<geo::CoverageRegion> regions;
  std::vector<int> vehicles_per_cloudlet;
  std::vector<double> rates = {1};
  std::map<std::string, double> type_mix = {{"Vehicle", 1}};
  double speed_min = 0;
  double speed_max = 0;
  int waypoints = 2;
  double alert_probability = 0;
  std::map<std::string, double> alert_mix = {{"Tireslip", 1}};
  std::vector<VehicleSpec> vehicles;
  std::vector<ScriptedAlert> alerts;
  std::vector<ScriptedRogueUpdate> rogue_updates;
  std::size_t max_members = broker::kMaxMembers;
  std::size_t queue_capacity = broker::kQueueCapacityBytes;
};

/// Throws kConfigError with a field path.
ScenarioConfig ScenarioFromJson(nlohmann::json const& doc, std::string const& base_dir);
ScenarioConfig ScenarioFromFile(std::string const& path);

/// Per-message measurements. Durations are wall-clock.
struct MessageRecord {
  std::uint64_t id = 0;
  std::string cloudlet;
  std::string sender;
  std::string outcome;
  int deliveries = 0;
  int forward_denied = 0;
  double policy_eval_us = 0;
  double policy_eval_cpu_us = 0;  // thread CPU time; excludes preemption
  double pipeline_us = 0;
  std::optional<double> trip_ms;  // only with deliveries
};

struct CellMetrics {
  int vehicles = 0;  // per cloudlet
  double rate = 0;
  std::vector<MessageRecord> messages;
};

struct MetricsRecord {
  std::vector<CellMetrics> cells;
};

struct Totals {
  std::uint64_t published = 0;
  std::uint64_t notified = 0;
  std::uint64_t blocked = 0;
  std::uint64_t dropped = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t forward_denied = 0;
  std::uint64_t queue_overflow = 0;
  std::uint64_t coverage_gaps = 0;
  std::uint64_t join_refused = 0;
  std::uint64_t unpublished = 0;  // ticks with no cloudlet to publish to
};

struct RunResult {
  MetricsRecord metrics;
  /// Totally ordered; one JSON object per line when written out. Times are
  /// integer microseconds of simulated time.
  std::vector<nlohmann::json> events;
  Totals totals;
};

/// Deterministic for a fixed seed apart from the wall-clock durations in
/// `metrics`.
RunResult RunScenario(ScenarioConfig const& cfg);

void WriteEventLog(std::vector<nlohmann::json> const& events, std::string const& path);
std::string EventLogText(std::vector<nlohmann::json> const& events);

/// CSV with columns vehicles,rate,metric,mean,stddev,max; metrics are
/// policy_eval_us, pipeline_us and trip_ms. Cells without samples for a
/// metric get no row. Optionally also the per-message CSV. Throws kIoError.
void EmitMetrics(MetricsRecord const& record, std::string const& path,
                 std::string const& per_message_path = "");
std::string MetricsCsv(MetricsRecord const& record);
std::string PerMessageCsv(MetricsRecord const& record);

struct Summary {
  double mean = 0;
  double stddev = 0;  // sample standard deviation
  double max = 0;
  std::size_t count = 0;
};
Summary Summarize(std::vector<double> const& xs);

/// Uniform in [0, 1) from the top 53 bits; independent of the standard
/// library's distributions so runs replay across toolchains.
double UnitReal(std::mt19937_64& rng);
/// Uniform in [0, n) by rejection.
std::uint64_t UniformIndex(std::mt19937_64& rng, std::uint64_t n);

/// "YYYY-MM-DD hh:mm:ss.ffffff" for a simulated time, starting from
/// 2019-03-19 10:00:00.
std::string SimTimestamp(std::int64_t micros);

}  // namespace cits::sim

#endif  // CITS_SIM_H
