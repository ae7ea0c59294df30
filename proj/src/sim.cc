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

#include "cits/sim.h"
#include "cits/error.h"
#include "cits/store_config.h"
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <queue>
#include <set>
#include <tuple>

namespace cits::sim {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void Fail(std::string const& path, std::string const& what) {
  throw Error(ErrorCode::kConfigError, path + ": " + what);
}

double Num(json const& j, std::string const& path) {
  if (!j.is_number()) Fail(path, "expected a number");
  return j.get<double>();
}

double NumIn(json const& j, std::string const& path, double lo, double hi) {
  double v = Num(j, path);
  if (!(v >= lo && v <= hi)) {
    Fail(path, "must be within [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return v;
}

int IntIn(json const& j, std::string const& path, int lo, int hi) {
  if (!j.is_number_integer()) Fail(path, "expected an integer");
  auto v = j.get<long long>();
  if (v < lo || v > hi) {
    Fail(path, "must be within [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return int(v);
}

std::string Str(json const& j, std::string const& path) {
  if (!j.is_string() || j.get<std::string>().empty()) Fail(path, "expected a non-empty string");
  return j.get<std::string>();
}

geo::LatLon Point(json const& j, std::string const& path) {
  if (!j.is_array() || j.size() != 2) Fail(path, "expected [lat, lon]");
  return {NumIn(j[0], path + "[0]", -90, 90), NumIn(j[1], path + "[1]", -180, 180)};
}

std::map<std::string, double> Weights(json const& j, std::string const& path,
                                      std::function<void(std::string const&)> check) {
  if (!j.is_object() || j.empty()) Fail(path, "expected a non-empty object of weights");
  std::map<std::string, double> out;
  for (auto const& [k, v] : j.items()) {
    check(k);
    double w = Num(v, path + "." + k);
    if (!(w > 0)) Fail(path + "." + k, "weights must be positive");
    out[k] = w;
  }
  return out;
}

std::string Resolve(std::string const& base, std::string const& p) {
  fs::path path(p);
  if (path.is_absolute() || base.empty()) return path.lexically_normal().string();
  return (fs::path(base) / path).lexically_normal().string();
}

std::set<std::string> const kVehicleTypes = {"Vehicle", "Police", "Medical"};
std::set<std::string> const kEntityTypes = {"Vehicle", "Police", "Medical", "Infrastructure"};

std::string GeneratedName(std::string const& cloudlet, int k) {
  return cloudlet + "-car" + std::to_string(k);
}

std::string Fixed(double v, char const* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

template <typename T>
T const& Pick(std::mt19937_64& rng, std::map<T, double> const& weights) {
  double total = 0;
  for (auto const& [k, w] : weights) total += w;
  double x = UnitReal(rng) * total;
  for (auto const& [k, w] : weights) {
    if (x < w) return k;
    x -= w;
  }
  return weights.rbegin()->first;
}

}  // namespace

double UnitReal(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

std::uint64_t UniformIndex(std::mt19937_64& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    auto x = rng();
    if (x < limit) return x % n;
  }
}

std::string SimTimestamp(std::int64_t micros) {
  std::int64_t secs = micros / 1'000'000 + 10 * 3600;
  std::int64_t frac = micros % 1'000'000;
  std::int64_t day = 19 + secs / 86400;
  secs %= 86400;
  char buf[64];
  std::snprintf(buf, sizeof buf, "2019-03-%02lld %02lld:%02lld:%02lld.%06lld",
                static_cast<long long>(day), static_cast<long long>(secs / 3600),
                static_cast<long long>(secs / 60 % 60), static_cast<long long>(secs % 60),
                static_cast<long long>(frac));
  return buf;
}

ScenarioConfig ScenarioFromJson(json const& doc, std::string const& base_dir) {
  if (!doc.is_object()) Fail("scenario", "expected an object");
  static std::set<std::string> const known = {
      "name", "seed", "duration_s", "world", "policies", "rules", "regions", "grid",
      "vehicles_per_cloudlet", "rates", "fleet", "random_alerts", "vehicles", "alerts",
      "rogue_updates", "max_members", "queue_capacity_bytes"};
  for (auto const& [k, v] : doc.items()) {
    if (!known.count(k)) Fail(k, "unknown field");
  }
  ScenarioConfig cfg;
  if (doc.contains("name")) cfg.name = Str(doc["name"], "name");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) Fail("seed", "expected a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (!doc.contains("duration_s")) Fail("duration_s", "missing");
  cfg.duration_s = NumIn(doc["duration_s"], "duration_s", 0, kMaxDuration);
  if (cfg.duration_s <= 0) Fail("duration_s", "must be positive");
  for (auto [key, field] : {std::pair{"world", &cfg.world_path},
                            std::pair{"policies", &cfg.policies_path},
                            std::pair{"rules", &cfg.rules_path}}) {
    if (!doc.contains(key)) Fail(key, "missing");
    *field = Resolve(base_dir, Str(doc[key], key));
  }

  if (doc.contains("regions") == doc.contains("grid")) {
    Fail("regions", "give exactly one of \"regions\" and \"grid\"");
  }
  if (doc.contains("regions")) {
    cfg.regions = geo::RegionsFromJson(doc["regions"], "regions");
  } else {
    auto const& g = doc["grid"];
    if (!g.is_object()) Fail("grid", "expected an object");
    for (auto key : {"south_west", "rows", "cols", "cell_deg"}) {
      if (!g.contains(key)) Fail(std::string("grid.") + key, "missing");
    }
    auto sw = Point(g["south_west"], "grid.south_west");
    auto cell = g["cell_deg"];
    if (!cell.is_array() || cell.size() != 2) Fail("grid.cell_deg", "expected [dlat, dlon]");
    double dlat = NumIn(cell[0], "grid.cell_deg[0]", 1e-9, 90);
    double dlon = NumIn(cell[1], "grid.cell_deg[1]", 1e-9, 180);
    int rows = IntIn(g["rows"], "grid.rows", 1, 100);
    int cols = IntIn(g["cols"], "grid.cols", 1, 100);
    try {
      cfg.regions = geo::Grid(sw, rows, cols, dlat, dlon);
      for (auto const& r : cfg.regions) r.Validate();
    } catch (Error const& e) {
      Fail("grid", e.what());
    }
  }
  if (cfg.regions.empty()) Fail("regions", "at least one region is needed");
  std::set<std::string> cloudlets;
  for (auto const& r : cfg.regions) cloudlets.insert(r.cloudlet);

  if (doc.contains("vehicles_per_cloudlet")) {
    auto const& v = doc["vehicles_per_cloudlet"];
    if (v.is_array()) {
      if (v.empty()) Fail("vehicles_per_cloudlet", "empty list");
      for (std::size_t i = 0; i < v.size(); ++i) {
        cfg.vehicles_per_cloudlet.push_back(IntIn(
            v[i], "vehicles_per_cloudlet[" + std::to_string(i) + "]", 1, kMaxVehiclesPerCloudlet));
      }
    } else {
      cfg.vehicles_per_cloudlet.push_back(
          IntIn(v, "vehicles_per_cloudlet", 1, kMaxVehiclesPerCloudlet));
    }
  }
  if (doc.contains("rates")) {
    auto const& v = doc["rates"];
    cfg.rates.clear();
    if (v.is_array()) {
      if (v.empty()) Fail("rates", "empty list");
      for (std::size_t i = 0; i < v.size(); ++i) {
        cfg.rates.push_back(NumIn(v[i], "rates[" + std::to_string(i) + "]", kMinRate, kMaxRate));
      }
    } else {
      cfg.rates.push_back(NumIn(v, "rates", kMinRate, kMaxRate));
    }
  }

  if (doc.contains("fleet")) {
    auto const& f = doc["fleet"];
    if (!f.is_object()) Fail("fleet", "expected an object");
    for (auto const& [k, v] : f.items()) {
      if (k == "types") {
        cfg.type_mix = Weights(v, "fleet.types", [](std::string const& t) {
          if (!kVehicleTypes.count(t)) Fail("fleet.types." + t, "unknown vehicle type");
        });
      } else if (k == "speed_mps") {
        if (!v.is_array() || v.size() != 2) Fail("fleet.speed_mps", "expected [min, max]");
        cfg.speed_min = NumIn(v[0], "fleet.speed_mps[0]", 0, 100);
        cfg.speed_max = NumIn(v[1], "fleet.speed_mps[1]", cfg.speed_min, 100);
      } else if (k == "waypoints") {
        cfg.waypoints = IntIn(v, "fleet.waypoints", 1, 20);
      } else {
        Fail("fleet." + k, "unknown field");
      }
    }
  }

  if (doc.contains("random_alerts")) {
    auto const& a = doc["random_alerts"];
    if (!a.is_object()) Fail("random_alerts", "expected an object");
    for (auto const& [k, v] : a.items()) {
      if (k == "probability") {
        cfg.alert_probability = NumIn(v, "random_alerts.probability", 0, 1);
      } else if (k == "types") {
        cfg.alert_mix = Weights(v, "random_alerts.types", [](std::string const& t) {
          try {
            alerts::ParseAlertType(t);
          } catch (Error const&) {
            Fail("random_alerts.types." + t, "unknown alert type");
          }
        });
      } else {
        Fail("random_alerts." + k, "unknown field");
      }
    }
  }

  // Names that exist in every cell.
  std::set<std::string> names;
  if (!cfg.vehicles_per_cloudlet.empty()) {
    int n = *std::min_element(cfg.vehicles_per_cloudlet.begin(), cfg.vehicles_per_cloudlet.end());
    for (auto const& r : cfg.regions) {
      for (int k = 1; k <= n; ++k) names.insert(GeneratedName(r.cloudlet, k));
    }
  }
  std::set<std::string> generated_anywhere;
  if (!cfg.vehicles_per_cloudlet.empty()) {
    int n = *std::max_element(cfg.vehicles_per_cloudlet.begin(), cfg.vehicles_per_cloudlet.end());
    for (auto const& r : cfg.regions) {
      for (int k = 1; k <= n; ++k) generated_anywhere.insert(GeneratedName(r.cloudlet, k));
    }
  }

  if (doc.contains("vehicles")) {
    auto const& vs = doc["vehicles"];
    if (!vs.is_array()) Fail("vehicles", "expected an array");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      auto p = "vehicles[" + std::to_string(i) + "]";
      auto const& v = vs[i];
      if (!v.is_object()) Fail(p, "expected an object");
      VehicleSpec spec;
      for (auto const& [k, val] : v.items()) {
        if (k == "name") {
          spec.name = Str(val, p + ".name");
        } else if (k == "type") {
          spec.type = Str(val, p + ".type");
          if (!kEntityTypes.count(spec.type)) Fail(p + ".type", "unknown type " + spec.type);
        } else if (k == "path") {
          if (!val.is_array() || val.empty()) Fail(p + ".path", "expected a list of points");
          for (std::size_t w = 0; w < val.size(); ++w) {
            spec.path.push_back(Point(val[w], p + ".path[" + std::to_string(w) + "]"));
          }
        } else if (k == "speed_mps") {
          spec.speed_mps = NumIn(val, p + ".speed_mps", 0, 100);
        } else if (k == "rate_hz") {
          spec.rate_hz = NumIn(val, p + ".rate_hz", kMinRate, kMaxRate);
        } else {
          Fail(p + "." + k, "unknown field");
        }
      }
      if (spec.name.empty()) Fail(p + ".name", "missing");
      if (spec.path.empty()) Fail(p + ".path", "missing");
      if (names.count(spec.name) || generated_anywhere.count(spec.name)) {
        Fail(p + ".name", "duplicate vehicle " + spec.name);
      }
      names.insert(spec.name);
      cfg.vehicles.push_back(std::move(spec));
    }
  }
  if (names.empty() && generated_anywhere.empty()) {
    Fail("vehicles", "the scenario has no vehicles");
  }

  if (doc.contains("alerts")) {
    auto const& as = doc["alerts"];
    if (!as.is_array()) Fail("alerts", "expected an array");
    for (std::size_t i = 0; i < as.size(); ++i) {
      auto p = "alerts[" + std::to_string(i) + "]";
      auto const& a = as[i];
      if (!a.is_object()) Fail(p, "expected an object");
      ScriptedAlert s;
      if (!a.contains("time")) Fail(p + ".time", "missing");
      s.time = NumIn(a["time"], p + ".time", 0, cfg.duration_s);
      if (!a.contains("vehicle")) Fail(p + ".vehicle", "missing");
      s.vehicle = Str(a["vehicle"], p + ".vehicle");
      if (!names.count(s.vehicle)) Fail(p + ".vehicle", "unknown vehicle " + s.vehicle);
      if (a.contains("alert") && !a["alert"].is_null()) {
        s.alert = Str(a["alert"], p + ".alert");
      }
      cfg.alerts.push_back(std::move(s));
    }
  }

  if (doc.contains("rogue_updates")) {
    auto const& rs = doc["rogue_updates"];
    if (!rs.is_array()) Fail("rogue_updates", "expected an array");
    for (std::size_t i = 0; i < rs.size(); ++i) {
      auto p = "rogue_updates[" + std::to_string(i) + "]";
      auto const& r = rs[i];
      if (!r.is_object()) Fail(p, "expected an object");
      ScriptedRogueUpdate u;
      if (!r.contains("time")) Fail(p + ".time", "missing");
      u.time = NumIn(r["time"], p + ".time", 0, cfg.duration_s);
      if (!r.contains("publisher")) Fail(p + ".publisher", "missing");
      u.publisher = Str(r["publisher"], p + ".publisher");
      if (!r.contains("command")) Fail(p + ".command", "missing");
      try {
        alerts::ParseRogueCommand(r["command"]);
      } catch (Error const& e) {
        Fail(p + ".command", e.what());
      }
      u.command = r["command"];
      if (r.contains("cloudlets")) {
        if (!r["cloudlets"].is_array()) Fail(p + ".cloudlets", "expected an array");
        for (auto const& c : r["cloudlets"]) {
          auto name = Str(c, p + ".cloudlets");
          if (!cloudlets.count(name)) Fail(p + ".cloudlets", "unknown cloudlet " + name);
          u.cloudlets.push_back(name);
        }
      }
      cfg.rogue_updates.push_back(std::move(u));
    }
  }

  if (doc.contains("max_members")) {
    cfg.max_members = std::size_t(IntIn(doc["max_members"], "max_members", 1, 1'000'000));
  }
  if (doc.contains("queue_capacity_bytes")) {
    cfg.queue_capacity =
        std::size_t(IntIn(doc["queue_capacity_bytes"], "queue_capacity_bytes", 1, 1 << 30));
  }
  return cfg;
}

ScenarioConfig ScenarioFromFile(std::string const& path) {
  auto doc = ReadJsonFile(path);
  try {
    return ScenarioFromJson(doc, fs::path(path).parent_path().string());
  } catch (Error const& e) {
    if (e.code() != ErrorCode::kConfigError) throw;
    throw Error(ErrorCode::kConfigError, path + ": " + e.what());
  }
}

namespace {

struct Vehicle {
  VehicleSpec spec;
  double rate = 1;
  std::int64_t period_us = 1'000'000;
  std::vector<double> seg_len;
  double length = 0;

  void Prepare() {
    for (std::size_t i = 0; i + 1 < spec.path.size(); ++i) {
      seg_len.push_back(geo::DistanceMeters(spec.path[i], spec.path[i + 1]));
      length += seg_len.back();
    }
  }

  // Constant speed, reversing at the ends of the path.
  std::pair<geo::LatLon, std::size_t> At(double t, bool& backwards) const {
    backwards = false;
    if (length <= 0 || spec.speed_mps <= 0) return {spec.path.front(), 0};
    double d = std::fmod(spec.speed_mps * t, 2 * length);
    if (d > length) {
      d = 2 * length - d;
      backwards = true;
    }
    for (std::size_t i = 0; i < seg_len.size(); ++i) {
      if (d <= seg_len[i] || i + 1 == seg_len.size()) {
        double f = seg_len[i] > 0 ? std::min(1.0, d / seg_len[i]) : 0;
        auto a = spec.path[i], b = spec.path[i + 1];
        return {{a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)}, i};
      }
      d -= seg_len[i];
    }
    return {spec.path.back(), seg_len.size() - 1};
  }

  std::string Heading(std::size_t seg, bool backwards) const {
    if (length <= 0 || spec.speed_mps <= 0) return "stopped";
    auto a = spec.path[seg], b = spec.path[seg + 1];
    if (backwards) std::swap(a, b);
    double angle = std::atan2(b.lat - a.lat, (b.lon - a.lon) * std::cos(a.lat * M_PI / 180));
    static char const* const names[] = {"east", "northeast", "north", "northwest",
                                        "west", "southwest", "south", "southeast"};
    int k = int(std::lround(angle / (M_PI / 4)));
    return names[((k % 8) + 8) % 8];
  }
};

geo::LatLon RandomPointIn(std::mt19937_64& rng, geo::CoverageRegion const& r) {
  if (auto const* b = std::get_if<geo::Rect>(&r.shape)) {
    return {b->min_lat + UnitReal(rng) * (b->max_lat - b->min_lat),
            b->min_lon + UnitReal(rng) * (b->max_lon - b->min_lon)};
  }
  auto const& c = std::get<geo::Circle>(r.shape);
  double dlat = c.radius_m / geo::kMetersPerDegree;
  double dlon = dlat / std::cos(c.center.lat * M_PI / 180);
  for (;;) {
    geo::LatLon p{c.center.lat + (2 * UnitReal(rng) - 1) * dlat,
                  c.center.lon + (2 * UnitReal(rng) - 1) * dlon};
    if (r.Contains(p)) return p;
  }
}

geo::Rect Bounds(std::vector<geo::CoverageRegion> const& regions) {
  geo::Rect box{90, 180, -90, -180};
  for (auto const& r : regions) {
    geo::Rect b;
    if (auto const* rect = std::get_if<geo::Rect>(&r.shape)) {
      b = *rect;
    } else {
      auto const& c = std::get<geo::Circle>(r.shape);
      double dlat = c.radius_m / geo::kMetersPerDegree;
      double dlon = dlat / std::cos(c.center.lat * M_PI / 180);
      b = {c.center.lat - dlat, c.center.lon - dlon, c.center.lat + dlat, c.center.lon + dlon};
    }
    box.min_lat = std::min(box.min_lat, b.min_lat);
    box.min_lon = std::min(box.min_lon, b.min_lon);
    box.max_lat = std::max(box.max_lat, b.max_lat);
    box.max_lon = std::max(box.max_lon, b.max_lon);
  }
  return box;
}

struct Inputs {
  AttributeStore world;
  policy::PolicySet policies;
  alerts::AlertRuleSet rules;
};

class CellRun {
 public:
  CellRun(ScenarioConfig const& cfg, Inputs const& in, int vehicles, double rate,
          std::size_t cell_index, RunResult& out)
      : cfg_(cfg),
        in_(in),
        out_(out),
        rng_(cfg.seed + 0x9E3779B97F4A7C15ULL * cell_index),
        store_(in.world),
        controller_(cfg.seed),
        geo_(cfg.regions) {
    broker::BrokerOptions options;
    options.max_members = cfg.max_members;
    options.queue_capacity = cfg.queue_capacity;
    options.clock = [this] { return double(now_) / 1e6; };
    options.on_event = [this](json const& e) {
      json ev = e;
      ev.erase("at");
      Log(std::move(ev));
    };
    broker_.emplace(store_, in.policies, in.rules, controller_, std::move(options));
    cell_.vehicles = vehicles;
    cell_.rate = rate;
    Log({{"event", "cell"}, {"vehicles_per_cloudlet", vehicles}, {"rate", rate}});
    for (auto const& r : cfg.regions) broker_->AddCloudlet(r.cloudlet);
    BuildFleet(vehicles, rate);
  }

  void Run() {
    using Item = std::tuple<std::int64_t, std::uint64_t, int, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    std::uint64_t seq = 0;
    enum { kTick, kAlert, kRogue };
    auto const end = std::int64_t(std::llround(cfg_.duration_s * 1e6));
    for (std::size_t i = 0; i < fleet_.size(); ++i) {
      auto phase = std::int64_t(UniformIndex(rng_, std::uint64_t(fleet_[i].period_us)));
      queue.emplace(phase, seq++, kTick, i);
    }
    for (std::size_t i = 0; i < cfg_.alerts.size(); ++i) {
      queue.emplace(std::llround(cfg_.alerts[i].time * 1e6), seq++, kAlert, i);
    }
    for (std::size_t i = 0; i < cfg_.rogue_updates.size(); ++i) {
      queue.emplace(std::llround(cfg_.rogue_updates[i].time * 1e6), seq++, kRogue, i);
    }
    while (!queue.empty()) {
      auto [t, s, kind, index] = queue.top();
      queue.pop();
      if (t >= end) continue;
      now_ = t;
      if (kind == kTick) {
        auto& v = fleet_[index];
        std::optional<std::string> alert;
        if (cfg_.alert_probability > 0 && UnitReal(rng_) < cfg_.alert_probability) {
          alert = Pick(rng_, cfg_.alert_mix);
        }
        Publish(v, alert);
        queue.emplace(t + v.period_us, seq++, kTick, index);
      } else if (kind == kAlert) {
        auto const& a = cfg_.alerts[index];
        if (auto it = by_name_.find(a.vehicle); it != by_name_.end()) {
          Publish(fleet_[it->second], a.alert);
        }
      } else {
        RogueUpdate(cfg_.rogue_updates[index]);
      }
    }
    for (auto const& name : broker_->CloudletNames()) {
      auto st = broker_->GetCloudlet(name).Stats();
      auto& t = out_.totals;
      t.published += st.attempted;
      t.notified += st.notified;
      t.blocked += st.blocked;
      t.dropped += st.dropped;
      t.deliveries += st.deliveries;
      t.forward_denied += st.forward_denied;
      t.queue_overflow += st.queue_overflow;
    }
    out_.metrics.cells.push_back(std::move(cell_));
  }

 private:
  void Log(json e) {
    e["t"] = now_;
    out_.events.push_back(std::move(e));
  }

  void BuildFleet(int per_cloudlet, double rate) {
    auto box = Bounds(cfg_.regions);
    for (auto const& region : cfg_.regions) {
      for (int k = 1; k <= per_cloudlet; ++k) {
        Vehicle v;
        v.spec.name = GeneratedName(region.cloudlet, k);
        v.spec.type = Pick(rng_, cfg_.type_mix);
        v.spec.path.push_back(RandomPointIn(rng_, region));
        for (int w = 1; w < cfg_.waypoints; ++w) {
          v.spec.path.push_back({box.min_lat + UnitReal(rng_) * (box.max_lat - box.min_lat),
                                 box.min_lon + UnitReal(rng_) * (box.max_lon - box.min_lon)});
        }
        v.spec.speed_mps = cfg_.speed_min + UnitReal(rng_) * (cfg_.speed_max - cfg_.speed_min);
        v.rate = rate;
        fleet_.push_back(std::move(v));
      }
    }
    for (auto const& spec : cfg_.vehicles) {
      Vehicle v;
      v.spec = spec;
      v.rate = spec.rate_hz.value_or(rate);
      fleet_.push_back(std::move(v));
    }
    for (std::size_t i = 0; i < fleet_.size(); ++i) {
      auto& v = fleet_[i];
      v.period_us = std::max<std::int64_t>(1, std::llround(1e6 / v.rate));
      v.Prepare();
      by_name_[v.spec.name] = i;
      broker_->controller().Register(v.spec.name, v.spec.type);
      geo_.AddVehicle(v.spec.name);
      Log({{"event", "register"}, {"entity", v.spec.name}, {"type", v.spec.type}});
    }
    for (auto const& u : cfg_.rogue_updates) {
      if (!broker_->controller().IsRegistered(u.publisher)) {
        broker_->controller().Register(u.publisher, "User");
        Log({{"event", "register"}, {"entity", u.publisher}, {"type", "User"}});
      }
    }
  }

  void Reassociate(Vehicle const& v, geo::LatLon p) {
    auto const& name = v.spec.name;
    auto delta = geo_.UpdatePosition(name, p);
    if (delta.coverage_gap) {
      ++out_.totals.coverage_gaps;
      Log({{"event", "coverage_gap"}, {"entity", name}});
    }
    for (auto const& c : delta.left) {
      broker_->Leave(name, c);
      Log({{"event", "leave"}, {"entity", name}, {"cloudlet", c}});
    }
    for (auto const& c : delta.joined) {
      try {
        broker_->Join(name, c);
        Log({{"event", "join"}, {"entity", name}, {"cloudlet", c}});
      } catch (Error const& e) {
        ++out_.totals.join_refused;
        Log({{"event", "join_refused"}, {"entity", name}, {"cloudlet", c},
             {"error", ToString(e.code())}});
      }
    }
  }

  void Publish(Vehicle const& v, std::optional<std::string> const& alert) {
    bool backwards = false;
    auto [pos, seg] = v.At(double(now_) / 1e6, backwards);
    Reassociate(v, pos);
    auto memberships = broker_->MembershipsOf(v.spec.name);
    if (memberships.empty()) {
      ++out_.totals.unpublished;
      Log({{"event", "unpublished"}, {"entity", v.spec.name}});
      return;
    }
    json reported = {{"Latitude", pos.lat},
                     {"Longitude", pos.lon},
                     {"Time", SimTimestamp(now_)},
                     {"Velocity", v.spec.speed_mps},
                     {"Direction", v.Heading(seg, backwards)},
                     {"Elevation", 200},
                     {"Posit. Accuracy", 5},
                     {"Steering Wheel Angle", 0},
                     {"Alert", alert ? json(*alert) : json(nullptr)}};
    json payload = {{"state", {{"reported", reported}}}};
    auto topic = broker::ShadowTopic(v.spec.name);
    for (auto const& c : memberships) {
      auto id = broker_->Submit(v.spec.name, c, topic, payload);
      Log({{"event", "publish"},
           {"id", id},
           {"sender", v.spec.name},
           {"cloudlet", c},
           {"alert", alert ? json(*alert) : json(nullptr)}});
      for (auto const& r : broker_->Drain(c)) Record(r);
    }
  }

  void Record(broker::PipelineResult const& r) {
    Log({{"event", "decision"},
         {"id", r.message_id},
         {"cloudlet", r.cloudlet},
         {"sender", r.sender},
         {"outcome", broker::ToString(r.outcome)},
         {"decision", alerts::ToString(r.decision.kind)},
         {"reason", r.reason},
         {"reporters", r.decision.reporters},
         {"deliveries", r.deliveries.size()},
         {"forward_denied", r.forward_denied}});
    for (auto const& d : r.deliveries) {
      Log({{"event", "deliver"},
           {"id", d.message_id},
           {"cloudlet", d.cloudlet},
           {"recipient", d.recipient},
           {"topic", d.topic},
           {"payload", d.payload}});
    }
    MessageRecord m;
    m.id = r.message_id;
    m.cloudlet = r.cloudlet;
    m.sender = r.sender;
    m.outcome = std::string(broker::ToString(r.outcome));
    m.deliveries = int(r.deliveries.size());
    m.forward_denied = r.forward_denied;
    m.policy_eval_us = r.policy_us;
    m.policy_eval_cpu_us = r.policy_cpu_us;
    m.pipeline_us = r.pipeline_us;
    if (!r.deliveries.empty()) m.trip_ms = r.trip_us / 1000.0;
    cell_.messages.push_back(std::move(m));
  }

  void RogueUpdate(ScriptedRogueUpdate const& u) {
    Log({{"event", "rogue_command"},
         {"publisher", u.publisher},
         {"command", u.command},
         {"cloudlets", u.cloudlets}});
    try {
      broker_->UpdateRogues(u.publisher, u.command, u.cloudlets);
    } catch (Error const& e) {
      Log({{"event", "rogue_command_failed"},
           {"publisher", u.publisher},
           {"error", ToString(e.code())}});
    }
  }

  ScenarioConfig const& cfg_;
  Inputs const& in_;
  RunResult& out_;
  std::mt19937_64 rng_;
  std::int64_t now_ = 0;
  SharedAttributeStore store_;
  broker::CentralController controller_;
  geo::GeoAssociator geo_;
  std::optional<broker::Broker> broker_;
  std::vector<Vehicle> fleet_;
  std::map<std::string, std::size_t> by_name_;
  CellMetrics cell_;
};

}  // namespace

RunResult RunScenario(ScenarioConfig const& cfg) {
  Inputs in{StoreFromJson(ReadJsonFile(cfg.world_path)),
            policy::PolicySet::FromFile(cfg.policies_path),
            alerts::AlertRuleSet::FromFile(cfg.rules_path)};
  RunResult out;
  auto counts = cfg.vehicles_per_cloudlet.empty() ? std::vector<int>{0} : cfg.vehicles_per_cloudlet;
  std::size_t index = 0;
  for (int n : counts) {
    for (double rate : cfg.rates) {
      CellRun(cfg, in, n, rate, index++, out).Run();
    }
  }
  return out;
}

std::string EventLogText(std::vector<json> const& events) {
  std::string out;
  for (auto const& e : events) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

namespace {

void WriteText(std::string const& path, std::string const& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

}  // namespace

void WriteEventLog(std::vector<json> const& events, std::string const& path) {
  WriteText(path, EventLogText(events));
}

Summary Summarize(std::vector<double> const& xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0;
  s.max = xs.front();
  for (double x : xs) {
    sum += x;
    s.max = std::max(s.max, x);
  }
  s.mean = sum / double(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / double(xs.size() - 1));
  }
  return s;
}

std::string MetricsCsv(MetricsRecord const& record) {
  std::string out = "vehicles,rate,metric,mean,stddev,max\n";
  for (auto const& cell : record.cells) {
    std::vector<double> policy, pipeline, trip;
    for (auto const& m : cell.messages) {
      policy.push_back(m.policy_eval_us);
      pipeline.push_back(m.pipeline_us);
      if (m.trip_ms) trip.push_back(*m.trip_ms);
    }
    for (auto const& [metric, xs] : {std::pair{"policy_eval_us", &policy},
                                     std::pair{"pipeline_us", &pipeline},
                                     std::pair{"trip_ms", &trip}}) {
      if (xs->empty()) continue;
      auto s = Summarize(*xs);
      out += std::to_string(cell.vehicles) + "," + Fixed(cell.rate, "%g") + "," + metric + "," +
             Fixed(s.mean, "%.6f") + "," + Fixed(s.stddev, "%.6f") + "," + Fixed(s.max, "%.6f") +
             "\n";
    }
  }
  return out;
}

std::string PerMessageCsv(MetricsRecord const& record) {
  std::string out =
      "vehicles,rate,id,cloudlet,sender,outcome,deliveries,forward_denied,"
      "policy_eval_us,pipeline_us,trip_ms,policy_eval_cpu_us\n";
  for (auto const& cell : record.cells) {
    for (auto const& m : cell.messages) {
      out += std::to_string(cell.vehicles) + "," + Fixed(cell.rate, "%g") + "," +
             std::to_string(m.id) + "," + m.cloudlet + "," + m.sender + "," + m.outcome + "," +
             std::to_string(m.deliveries) + "," + std::to_string(m.forward_denied) + "," +
             Fixed(m.policy_eval_us, "%.17g") + "," + Fixed(m.pipeline_us, "%.17g") + "," +
             (m.trip_ms ? Fixed(*m.trip_ms, "%.17g") : std::string()) + "," +
             Fixed(m.policy_eval_cpu_us, "%.17g") + "\n";
    }
  }
  return out;
}

void EmitMetrics(MetricsRecord const& record, std::string const& path,
                 std::string const& per_message_path) {
  WriteText(path, MetricsCsv(record));
  if (!per_message_path.empty()) WriteText(per_message_path, PerMessageCsv(record));
}

}  // namespace cits::sim
