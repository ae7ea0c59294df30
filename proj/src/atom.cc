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

#include "cits/atom.h"
#include "cits/error.h"
#include <cmath>
#include <cstdio>

namespace cits {

std::strong_ordering operator<=>(Atom const& a, Atom const& b) {
  if (a.is_number() != b.is_number()) {
    return a.is_number() ? std::strong_ordering::less
                         : std::strong_ordering::greater;
  }
  if (a.is_number()) {
    // NaN never enters a store (JSON has no NaN); treat as equal otherwise.
    if (a.number() < b.number()) return std::strong_ordering::less;
    if (a.number() > b.number()) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
  return a.string().compare(b.string()) <=> 0;
}

std::string Atom::ToString() const {
  if (is_string()) return string();
  double v = number();
  if (std::nearbyint(v) == v && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string Atom::ToLiteral() const {
  if (is_number()) return ToString();
  std::string out = "\"";
  for (char c : string()) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

nlohmann::json ToJson(Atom const& a) {
  if (a.is_number()) return a.number();
  return a.string();
}

Atom AtomFromJson(nlohmann::json const& j) {
  if (j.is_number()) return Atom(j.get<double>());
  if (j.is_string()) return Atom(j.get<std::string>());
  throw Error(ErrorCode::kInvalidArgument,
              "atomic value must be a number or string, got " + j.dump());
}

std::string ToString(AtomSet const& s) {
  std::string out = "{";
  bool first = true;
  for (auto const& a : s) {
    if (!first) out += ", ";
    first = false;
    out += a.ToLiteral();
  }
  out += "}";
  return out;
}

}  // namespace cits
