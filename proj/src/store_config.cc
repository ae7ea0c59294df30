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

#include "cits/store_config.h"
#include "cits/error.h"
#include <fstream>
#include <sstream>

namespace cits {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(std::string const& path, std::string const& what) {
  throw Error(ErrorCode::kConfigError, path + ": " + what);
}

template <typename F>
void AtPath(std::string const& path, F&& f) {
  try {
    f();
  } catch (Error const& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    Fail(path, std::string(ToString(e.code())) + ": " + e.what());
  } catch (json::exception const& e) {
    Fail(path, e.what());
  }
}

}  // namespace

AttributeValue AttributeValueFromJson(json const& j) {
  if (j.is_null()) return AtomicValue{};
  if (j.is_array()) {
    AtomSet s;
    for (auto const& e : j) s.insert(AtomFromJson(e));
    return s;
  }
  return AtomicValue{AtomFromJson(j)};
}

json ToJson(AttributeValue const& v) {
  if (auto const* a = std::get_if<AtomicValue>(&v)) {
    return a->has_value() ? ToJson(**a) : json(nullptr);
  }
  json arr = json::array();
  for (auto const& e : std::get<AtomSet>(v)) arr.push_back(ToJson(e));
  return arr;
}

void DeclareAttributesFromJson(json const& attributes, AttributeStore& store,
                               std::string const& path) {
  if (!attributes.is_array()) Fail(path, "expected an array");
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    auto p = path + "[" + std::to_string(i) + "]";
    AtPath(p, [&] {
      auto const& a = attributes[i];
      AttributeSchema schema;
      schema.name = a.at("name").get<std::string>();
      auto type = a.at("type").get<std::string>();
      if (type == "set") {
        schema.type = AttributeType::kSet;
      } else if (type == "atomic") {
        schema.type = AttributeType::kAtomic;
      } else {
        Fail(p + ".type", "expected \"set\" or \"atomic\"");
      }
      for (auto const& r : a.at("range")) schema.range.push_back(AtomFromJson(r));
      store.DeclareAttribute(std::move(schema));
    });
  }
}

AttributeStore StoreFromJson(json const& doc) {
  AttributeStore store;
  if (!doc.is_object()) Fail("$", "expected an object");
  if (doc.contains("attributes")) {
    DeclareAttributesFromJson(doc["attributes"], store, "attributes");
  }
  if (doc.contains("entities")) {
    auto const& entities = doc["entities"];
    if (!entities.is_array()) Fail("entities", "expected an array");
    for (std::size_t i = 0; i < entities.size(); ++i) {
      auto p = "entities[" + std::to_string(i) + "]";
      auto const& e = entities[i];
      EntityId id;
      AtPath(p, [&] {
        id.kind = EntityKindFromString(e.at("kind").get<std::string>());
        id.name = e.at("name").get<std::string>();
        store.AddEntity(id);
      });
      if (!e.contains("attributes")) continue;
      for (auto const& [name, value] : e["attributes"].items()) {
        AtPath(p + ".attributes." + name, [&] {
          store.SetAttribute(id, name, AttributeValueFromJson(value));
        });
      }
    }
  }
  if (doc.contains("system")) {
    for (auto const& [name, value] : doc["system"].items()) {
      AtPath("system." + name, [&] {
        store.SetAttribute(EntityId::System(), name, AttributeValueFromJson(value));
      });
    }
  }
  if (doc.contains("associations")) {
    auto const& assoc = doc["associations"];
    for (std::size_t i = 0; i < assoc.size(); ++i) {
      AtPath("associations[" + std::to_string(i) + "]", [&] {
        auto source = store.Resolve(assoc[i].at("source").get<std::string>());
        auto cloudlet =
            EntityId::Cloudlet(assoc[i].at("cloudlet").get<std::string>());
        store.Associate(source, cloudlet);
      });
    }
  }
  return store;
}

json ReadJsonFile(std::string const& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (json::parse_error const& e) {
    throw Error(ErrorCode::kConfigError, path + ": " + e.what());
  }
}

}  // namespace cits
