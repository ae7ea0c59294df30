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

#include "testing/geo_oracle.h"
#include <algorithm>
#include <cmath>
#include <set>

namespace cits::testing {

using geo::Circle;
using geo::CoverageRegion;
using geo::LatLon;
using geo::Rect;

double Real(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * double(rng() >> 11) * 0x1.0p-53;
}

bool OracleContains(CoverageRegion const& r, LatLon p) {
  if (auto const* b = std::get_if<Rect>(&r.shape)) {
    return !(p.lat < b->min_lat || p.lat > b->max_lat || p.lon < b->min_lon ||
             p.lon > b->max_lon);
  }
  auto const& c = std::get<Circle>(r.shape);
  double scale = std::cos(c.center.lat * M_PI / 180.0);
  double dlat = p.lat - c.center.lat;
  double dlon = (p.lon - c.center.lon) * scale;
  double reach = c.radius_m / 111320.0;
  return dlat * dlat + dlon * dlon <= reach * reach;
}

std::vector<CoverageRegion> RandomRegions(std::mt19937_64& rng, int n) {
  std::vector<CoverageRegion> out;
  for (int i = 0; i < n; ++i) {
    auto name = "tc" + std::to_string(i);
    if (rng() % 2) {
      double lat = Real(rng, 29.40, 29.46), lon = Real(rng, -98.52, -98.46);
      out.push_back({name, Rect{lat, lon, lat + Real(rng, 0.001, 0.02),
                                lon + Real(rng, 0.001, 0.02)}});
    } else {
      out.push_back({name, Circle{{Real(rng, 29.40, 29.46), Real(rng, -98.52, -98.46)},
                                  Real(rng, 50, 1500)}});
    }
  }
  return out;
}

std::vector<std::string> SampledItinerary(std::vector<LatLon> const& path,
                                          std::vector<CoverageRegion> const& regions) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto a = path[i], b = path[i + 1];
    double metres = geo::DistanceMeters(a, b);
    int steps = std::max(1, int(std::ceil(metres)));
    for (int k = 0; k <= steps; ++k) {
      double t = double(k) / steps;
      LatLon p{a.lat + t * (b.lat - a.lat), a.lon + t * (b.lon - a.lon)};
      std::set<std::string> here;
      for (auto const& r : regions) {
        if (OracleContains(r, p)) here.insert(r.cloudlet);
      }
      for (auto const& n : here) {
        if (seen.insert(n).second) out.push_back(n);
      }
    }
  }
  return out;
}

}  // namespace cits::testing
