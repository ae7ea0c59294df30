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

#ifndef CITS_BSM_H
#define CITS_BSM_H

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

namespace cits {

/// A basic safety message as published by a vehicle on its shadow topic:
///
///   {"state": {"reported": {"Latitude": "29.47", "Longitude": "-98.50",
///                           "Time": "2019-03-19 11:27:40.237734",
///                           "Velocity": "30", "Direction": "north", ...,
///                           "Alert": "Tireslip"}}}
///
/// Numeric fields may be JSON numbers or numeric strings.
struct BsmMessage {
  double latitude = 0;
  double longitude = 0;
  std::string time;
  double velocity = 0;
  std::string direction;
  double elevation = 0;
  double position_accuracy = 0;
  double steering_angle = 0;
  std::optional<std::string> alert;

  // Envelope, filled in by the broker.
  std::string sender;
  std::string topic;
  double received_at = 0;

  /// Parses and validates the payload. Latitude, Longitude and Time are
  /// required; the rest default. Throws kMalformedMessage.
  static BsmMessage FromJson(nlohmann::json const& payload);

  nlohmann::json ToJson() const;
};

/// Accepts a JSON number or a string holding one.
std::optional<double> NumberFromJson(nlohmann::json const& j);

/// "YYYY-MM-DD[ T]hh:mm:ss[.frac][Z|+hh:mm]".
bool IsTimestamp(std::string const& s);

}  // namespace cits

#endif  // CITS_BSM_H
