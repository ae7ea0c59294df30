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

#ifndef CITS_STORE_CONFIG_H
#define CITS_STORE_CONFIG_H

#include "cits/attribute_store.h"
#include <nlohmann/json.hpp>
#include <string>

namespace cits {

/// Builds a store from the world-config JSON document:
///
///   {
///     "attributes":   [{"name": "type", "type": "atomic", "range": [...]}],
///     "entities":     [{"kind": "Vehicle", "name": "Car-1",
///                       "attributes": {"type": "Vehicle", "zones": ["a"]}}],
///     "system":       {"threat-level": "low"},
///     "associations": [{"source": "Car-1", "cloudlet": "tc1"}]
///   }
///
/// Arrays denote set values, null the atomic null, scalars atomic values.
/// Entity attributes apply in document order, which fixes the recency order
/// of cloudlet atomic assignments. Errors are kConfigError with a field path.
AttributeStore StoreFromJson(nlohmann::json const& doc);

/// Applies only the "attributes" section to `store`.
void DeclareAttributesFromJson(nlohmann::json const& attributes,
                               AttributeStore& store, std::string const& path);

AttributeValue AttributeValueFromJson(nlohmann::json const& j);
nlohmann::json ToJson(AttributeValue const& v);

/// Reads and parses a JSON file; kIoError if unreadable, kConfigError if
/// not valid JSON.
nlohmann::json ReadJsonFile(std::string const& path);

}  // namespace cits

#endif  // CITS_STORE_CONFIG_H
