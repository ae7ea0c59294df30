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

#include "cits/bsm.h"
#include "cits/error.h"
#include <charconv>
#include <cmath>
#include <regex>

namespace cits {
namespace {

using nlohmann::json;

[[noreturn]] void Malformed(std::string const& what) {
  throw Error(ErrorCode::kMalformedMessage, what);
}

double Number(json const& reported, char const* key, bool required,
              double lo = -INFINITY, double hi = INFINITY) {
  auto it = reported.find(key);
  if (it == reported.end() || it->is_null()) {
    if (required) Malformed(std::string("missing ") + key);
    return 0;
  }
  auto v = NumberFromJson(*it);
  if (!v) Malformed(std::string(key) + " is not a number");
  if (!(*v >= lo && *v <= hi)) Malformed(std::string(key) + " out of range");
  return *v;
}

}  // namespace

std::optional<double> NumberFromJson(json const& j) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) return std::nullopt;
  auto const& s = j.get_ref<std::string const&>();
  auto begin = s.data();
  auto end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && end[-1] == ' ') --end;
  if (begin < end && *begin == '+') ++begin;
  double v = 0;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || begin == end || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

bool IsTimestamp(std::string const& s) {
  static std::regex const re(
      R"(\d{4}-\d{2}-\d{2}[ T]\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:?\d{2})?)");
  return std::regex_match(s, re);
}

BsmMessage BsmMessage::FromJson(json const& payload) {
  if (!payload.is_object()) Malformed("payload is not an object");
  auto state = payload.find("state");
  if (state == payload.end() || !state->is_object()) Malformed("missing state");
  auto rep = state->find("reported");
  if (rep == state->end() || !rep->is_object()) {
    Malformed("missing state.reported");
  }
  auto const& r = *rep;
  BsmMessage m;
  m.latitude = Number(r, "Latitude", true, -90, 90);
  m.longitude = Number(r, "Longitude", true, -180, 180);
  auto t = r.find("Time");
  if (t == r.end() || !t->is_string()) Malformed("missing Time");
  m.time = t->get<std::string>();
  if (!IsTimestamp(m.time)) Malformed("Time is not a timestamp");
  m.velocity = Number(r, "Velocity", false);
  m.elevation = Number(r, "Elevation", false);
  m.position_accuracy = Number(r, "Posit. Accuracy", false);
  m.steering_angle = Number(r, "Steering Wheel Angle", false);
  if (auto d = r.find("Direction"); d != r.end() && !d->is_null()) {
    if (!d->is_string()) Malformed("Direction is not a string");
    m.direction = d->get<std::string>();
  }
  if (auto a = r.find("Alert"); a != r.end() && !a->is_null()) {
    if (!a->is_string()) Malformed("Alert is not a string");
    m.alert = a->get<std::string>();
  }
  return m;
}

json BsmMessage::ToJson() const {
  json r = {{"Latitude", latitude},
            {"Longitude", longitude},
            {"Time", time},
            {"Velocity", velocity},
            {"Direction", direction},
            {"Elevation", elevation},
            {"Posit. Accuracy", position_accuracy},
            {"Steering Wheel Angle", steering_angle},
            {"Alert", alert ? json(*alert) : json(nullptr)}};
  return {{"state", {{"reported", r}}}};
}

}  // namespace cits
