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

#ifndef CITS_ATOM_H
#define CITS_ATOM_H

#include <nlohmann/json.hpp>
#include <compare>
#include <optional>
#include <set>
#include <string>
#include <variant>

namespace cits {

/// An atomic attribute value: a number or a string. Numbers compare
/// numerically and order before all strings.
class Atom {
 public:
  Atom() : value_(0.0) {}
  Atom(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  Atom(int v) : value_(static_cast<double>(v)) {}  // NOLINT
  Atom(std::string v) : value_(std::move(v)) {}    // NOLINT
  Atom(char const* v) : value_(std::string(v)) {}  // NOLINT

  bool is_number() const { return value_.index() == 0; }
  bool is_string() const { return value_.index() == 1; }
  double number() const { return std::get<0>(value_); }
  std::string const& string() const { return std::get<1>(value_); }

  /// Canonical text: numbers without trailing zeros, strings verbatim.
  std::string ToString() const;
  /// Policy-language literal form: strings double-quoted and escaped.
  std::string ToLiteral() const;

  friend bool operator==(Atom const& a, Atom const& b) = default;
  friend std::strong_ordering operator<=>(Atom const& a, Atom const& b);

 private:
  std::variant<double, std::string> value_;
};

using AtomSet = std::set<Atom>;
/// Atomic slot value; std::nullopt is the null value.
using AtomicValue = std::optional<Atom>;

nlohmann::json ToJson(Atom const& a);
/// Accepts a JSON number or string; throws Error(kInvalidArgument) otherwise.
Atom AtomFromJson(nlohmann::json const& j);

std::string ToString(AtomSet const& s);

}  // namespace cits

#endif  // CITS_ATOM_H
