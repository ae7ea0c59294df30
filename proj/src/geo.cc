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

#include "cits/geo.h"
#include "cits/bsm.h"
#include "cits/error.h"
#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace cits::geo {
namespace {

using nlohmann::json;

double Radians(double deg) { return deg * std::numbers::pi / 180.0; }

// Local planar frame around a circle's centre, in metres.
struct Frame {
  LatLon origin;
  double kx;
  double ky = kMetersPerDegree;

  explicit Frame(LatLon o) : origin(o), kx(kMetersPerDegree * std::cos(Radians(o.lat))) {}
  double X(LatLon p) const { return (p.lon - origin.lon) * kx; }
  double Y(LatLon p) const { return (p.lat - origin.lat) * ky; }
};

[[noreturn]] void ConfigFail(std::string const& path, std::string const& what) {
  throw Error(ErrorCode::kConfigError, path + ": " + what);
}

double Param(json const& params, char const* key, std::string const& path) {
  auto it = params.find(key);
  if (it == params.end()) ConfigFail(path + "." + key, "missing");
  auto v = NumberFromJson(*it);
  if (!v) ConfigFail(path + "." + key, "expected a number");
  return *v;
}

[[noreturn]] void MalformedShadow(std::string const& what) {
  throw Error(ErrorCode::kMalformedMessage, what);
}

}  // namespace

bool CoverageRegion::Contains(LatLon p) const {
  if (auto const* r = std::get_if<Rect>(&shape)) {
    return p.lat >= r->min_lat && p.lat <= r->max_lat && p.lon >= r->min_lon &&
           p.lon <= r->max_lon;
  }
  auto const& c = std::get<Circle>(shape);
  Frame f(c.center);
  double x = f.X(p);
  double y = f.Y(p);
  return x * x + y * y <= c.radius_m * c.radius_m;
}

void CoverageRegion::Validate() const {
  if (cloudlet.empty()) throw Error(ErrorCode::kInvalidArgument, "region without a cloudlet");
  auto bad = [&](char const* what) {
    throw Error(ErrorCode::kInvalidArgument, cloudlet + ": " + what);
  };
  if (auto const* r = std::get_if<Rect>(&shape)) {
    if (!(r->min_lat < r->max_lat && r->min_lon < r->max_lon)) bad("empty rectangle");
    if (r->min_lat < -90 || r->max_lat > 90 || r->min_lon < -180 || r->max_lon > 180) {
      bad("rectangle outside the globe");
    }
    return;
  }
  auto const& c = std::get<Circle>(shape);
  if (!(c.radius_m > 0) || !std::isfinite(c.radius_m)) bad("radius must be positive");
  if (std::abs(c.center.lat) >= 90 || std::abs(c.center.lon) > 180) bad("centre outside the globe");
}

std::vector<CoverageRegion> RegionsFromJson(json const& j, std::string const& path) {
  if (!j.is_array()) ConfigFail(path, "expected an array");
  std::vector<CoverageRegion> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto p = path + "[" + std::to_string(i) + "]";
    auto const& e = j[i];
    if (!e.is_object()) ConfigFail(p, "expected an object");
    CoverageRegion r;
    auto name = e.find("cloudlet");
    if (name == e.end() || !name->is_string()) ConfigFail(p + ".cloudlet", "expected a string");
    r.cloudlet = name->get<std::string>();
    auto params = e.find("params");
    if (params == e.end() || !params->is_object()) {
      ConfigFail(p + ".params", "expected an object");
    }
    auto shape = e.value("shape", std::string());
    if (shape == "rect") {
      r.shape = Rect{Param(*params, "min_lat", p + ".params"),
                     Param(*params, "min_lon", p + ".params"),
                     Param(*params, "max_lat", p + ".params"),
                     Param(*params, "max_lon", p + ".params")};
    } else if (shape == "circle") {
      r.shape = Circle{{Param(*params, "lat", p + ".params"),
                        Param(*params, "lon", p + ".params")},
                       Param(*params, "radius_m", p + ".params")};
    } else {
      ConfigFail(p + ".shape", "expected \"rect\" or \"circle\"");
    }
    try {
      r.Validate();
    } catch (Error const& err) {
      ConfigFail(p, err.what());
    }
    if (!seen.insert(r.cloudlet).second) {
      ConfigFail(p + ".cloudlet", "duplicate region for " + r.cloudlet);
    }
    out.push_back(std::move(r));
  }
  return out;
}

json ToJson(CoverageRegion const& r) {
  if (auto const* rect = std::get_if<Rect>(&r.shape)) {
    return {{"cloudlet", r.cloudlet},
            {"shape", "rect"},
            {"params",
             {{"min_lat", rect->min_lat},
              {"min_lon", rect->min_lon},
              {"max_lat", rect->max_lat},
              {"max_lon", rect->max_lon}}}};
  }
  auto const& c = std::get<Circle>(r.shape);
  return {{"cloudlet", r.cloudlet},
          {"shape", "circle"},
          {"params", {{"lat", c.center.lat}, {"lon", c.center.lon}, {"radius_m", c.radius_m}}}};
}

std::vector<CoverageRegion> Grid(LatLon sw, int rows, int cols, double cell_lat,
                                 double cell_lon) {
  if (rows < 1 || cols < 1 || !(cell_lat > 0) || !(cell_lon > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs positive dimensions");
  }
  std::vector<CoverageRegion> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out.push_back({"tc" + std::to_string(r * cols + c + 1),
                     Rect{sw.lat + r * cell_lat, sw.lon + c * cell_lon,
                          sw.lat + (r + 1) * cell_lat, sw.lon + (c + 1) * cell_lon}});
    }
  }
  return out;
}

std::set<std::string> Locate(LatLon p, std::vector<CoverageRegion> const& regions) {
  std::set<std::string> out;
  for (auto const& r : regions) {
    if (r.Contains(p)) out.insert(r.cloudlet);
  }
  return out;
}

bool ClipSegment(LatLon a, LatLon b, CoverageRegion const& region, double& t0, double& t1) {
  t0 = 0;
  t1 = 1;
  if (auto const* r = std::get_if<Rect>(&region.shape)) {
    // Liang-Barsky.
    double d[2] = {b.lat - a.lat, b.lon - a.lon};
    double lo[2] = {r->min_lat - a.lat, r->min_lon - a.lon};
    double hi[2] = {r->max_lat - a.lat, r->max_lon - a.lon};
    for (int k = 0; k < 2; ++k) {
      if (d[k] == 0) {
        if (lo[k] > 0 || hi[k] < 0) return false;
        continue;
      }
      double ta = lo[k] / d[k];
      double tb = hi[k] / d[k];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
    return true;
  }
  auto const& c = std::get<Circle>(region.shape);
  Frame f(c.center);
  double px = f.X(a), py = f.Y(a);
  double dx = f.X(b) - px, dy = f.Y(b) - py;
  double qa = dx * dx + dy * dy;
  double qb = 2 * (px * dx + py * dy);
  double qc = px * px + py * py - c.radius_m * c.radius_m;
  if (qa == 0) return qc <= 0;
  double disc = qb * qb - 4 * qa * qc;
  if (disc < 0) return false;
  double s = std::sqrt(disc);
  double r0 = (-qb - s) / (2 * qa);
  double r1 = (-qb + s) / (2 * qa);
  t0 = std::max(0.0, r0);
  t1 = std::min(1.0, r1);
  return t0 <= t1;
}

std::vector<std::string> PlanItinerary(std::vector<LatLon> const& path,
                                       std::vector<CoverageRegion> const& regions) {
  if (path.size() < 2) throw Error(ErrorCode::kEmptyPath, "a path needs two waypoints");
  std::vector<std::tuple<std::size_t, double, std::string>> touches;
  for (auto const& region : regions) {
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      double t0, t1;
      if (ClipSegment(path[i], path[i + 1], region, t0, t1)) {
        touches.emplace_back(i, t0, region.cloudlet);
        break;
      }
    }
  }
  std::sort(touches.begin(), touches.end());
  std::vector<std::string> out;
  for (auto const& t : touches) out.push_back(std::get<2>(t));
  return out;
}

double DistanceMeters(LatLon a, LatLon b) {
  double dy = (b.lat - a.lat) * kMetersPerDegree;
  double dx = (b.lon - a.lon) * kMetersPerDegree * std::cos(Radians((a.lat + b.lat) / 2));
  return std::hypot(dx, dy);
}

LatLon PositionFromShadow(json const& payload) {
  if (!payload.is_object() || !payload.contains("state") ||
      !payload["state"].is_object() || !payload["state"].contains("reported") ||
      !payload["state"]["reported"].is_object()) {
    MalformedShadow("expected {\"state\": {\"reported\": {...}}}");
  }
  auto const& r = payload["state"]["reported"];
  auto coordinate = [&](char const* key) {
    auto it = r.find(key);
    auto v = it == r.end() ? std::nullopt : NumberFromJson(*it);
    if (!v) MalformedShadow(std::string("missing ") + key);
    return *v;
  };
  LatLon p{coordinate("Latitude"), coordinate("Longitude")};
  if (p.lat < -90 || p.lat > 90 || p.lon < -180 || p.lon > 180) {
    MalformedShadow("coordinates out of range");
  }
  return p;
}

GeoAssociator::GeoAssociator(std::vector<CoverageRegion> regions)
    : regions_(std::move(regions)) {
  for (auto const& r : regions_) r.Validate();
}

void GeoAssociator::AddVehicle(std::string const& name) { current_[name]; }

ReassociationDelta GeoAssociator::UpdatePosition(std::string const& name, LatLon p) {
  auto it = current_.find(name);
  if (it == current_.end()) throw Error(ErrorCode::kUnknownVehicle, name);
  ReassociationDelta delta;
  auto next = Locate(p, regions_);
  if (next.empty()) {
    delta.coverage_gap = true;
    return delta;
  }
  std::set_difference(next.begin(), next.end(), it->second.begin(), it->second.end(),
                      std::inserter(delta.joined, delta.joined.end()));
  std::set_difference(it->second.begin(), it->second.end(), next.begin(), next.end(),
                      std::inserter(delta.left, delta.left.end()));
  it->second = std::move(next);
  return delta;
}

std::set<std::string> const& GeoAssociator::Associations(std::string const& name) const {
  auto it = current_.find(name);
  if (it == current_.end()) throw Error(ErrorCode::kUnknownVehicle, name);
  return it->second;
}

}  // namespace cits::geo
