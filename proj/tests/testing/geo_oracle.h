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

// Brute-force geometry for tests: containment written directly in degrees
// and itineraries found by walking paths in one-metre steps.

#ifndef CITS_TESTS_TESTING_GEO_ORACLE_H
#define CITS_TESTS_TESTING_GEO_ORACLE_H

#include "cits/geo.h"
#include <random>
#include <string>
#include <vector>

namespace cits::testing {

double Real(std::mt19937_64& rng, double lo, double hi);

bool OracleContains(geo::CoverageRegion const& r, geo::LatLon p);

/// Rectangles and circles scattered over a small city-sized area.
std::vector<geo::CoverageRegion> RandomRegions(std::mt19937_64& rng, int n);

/// Regions in order of first appearance along the path, sampled every metre.
std::vector<std::string> SampledItinerary(std::vector<geo::LatLon> const& path,
                                          std::vector<geo::CoverageRegion> const& regions);

}  // namespace cits::testing

#endif  // CITS_TESTS_TESTING_GEO_ORACLE_H
