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

#ifndef CITS_GEO_H
#define CITS_GEO_H

#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace cits::geo {

/// Equirectangular approximation: metres per degree of latitude, and per
/// degree of longitude scaled by cos(latitude).
inline constexpr double kMetersPerDegree = 111'320.0;

struct LatLon {
  double lat = 0;
  double lon = 0;
};

/// Axis-aligned in latitude/longitude.
struct Rect {
  double min_lat, min_lon, max_lat, max_lon;
};

struct Circle {
  LatLon center;
  double radius_m;
};

struct CoverageRegion {
  std::string cloudlet;
  std::variant<Rect, Circle> shape;

  /// Boundary-inclusive.
  bool Contains(LatLon p) const;
  /// Throws kInvalidArgument for empty names or degenerate shapes.
  void Validate() const;
};

/// [{"cloudlet": "tc1", "shape": "rect",
///   "params": {"min_lat": .., "min_lon": .., "max_lat": .., "max_lon": ..}},
///  {"cloudlet": "tc2", "shape": "circle",
///   "params": {"lat": .., "lon": .., "radius_m": ..}}]
/// Errors are kConfigError with a field path under `path`.
std::vector<CoverageRegion> RegionsFromJson(nlohmann::json const& j,
                                            std::string const& path = "regions");
nlohmann::json ToJson(CoverageRegion const& r);

/// rows x cols rectangles sharing edges, named tc1..tcN row by row from the
/// south-west corner.
std::vector<CoverageRegion> Grid(LatLon south_west, int rows, int cols,
                                 double cell_lat_deg, double cell_lon_deg);

std::set<std::string> Locate(LatLon p, std::vector<CoverageRegion> const& regions);

/// Cloudlets whose regions intersect the polyline, ordered by where the path
/// first touches them (ties by name). Throws kEmptyPath for < 2 waypoints.
std::vector<std::string> PlanItinerary(std::vector<LatLon> const& path,
                                       std::vector<CoverageRegion> const& regions);

/// Parameter interval [t0, t1] within [0, 1] where segment a->b lies in the
/// region, or false when they do not meet.
bool ClipSegment(LatLon a, LatLon b, CoverageRegion const& region, double& t0, double& t1);

/// Ground distance in metres under the same approximation.
double DistanceMeters(LatLon a, LatLon b);

/// Reads {"state": {"reported": {"Latitude": .., "Longitude": ..}}}; the
/// values may be numeric strings. Throws kMalformedMessage.
LatLon PositionFromShadow(nlohmann::json const& payload);

struct ReassociationDelta {
  std::set<std::string> joined;
  std::set<std::string> left;
  bool coverage_gap = false;

  bool empty() const { return joined.empty() && left.empty(); }
};

/// Tracks each vehicle's associated cloudlets from its reported position.
class GeoAssociator {
 public:
  explicit GeoAssociator(std::vector<CoverageRegion> regions);

  void AddVehicle(std::string const& name);
  bool HasVehicle(std::string const& name) const { return current_.count(name) > 0; }

  /// Sets associations to Locate(p). Outside every region the previous
  /// associations are kept and the delta reports a coverage gap. Throws
  /// kUnknownVehicle.
  ReassociationDelta UpdatePosition(std::string const& name, LatLon p);

  std::set<std::string> const& Associations(std::string const& name) const;
  std::vector<CoverageRegion> const& regions() const { return regions_; }

 private:
  std::vector<CoverageRegion> regions_;
  std::map<std::string, std::set<std::string>> current_;
};

}  // namespace cits::geo

#endif  // CITS_GEO_H
