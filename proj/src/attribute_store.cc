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

#include "cits/attribute_store.h"
#include "cits/error.h"
#include <algorithm>

namespace cits {

std::string_view ToString(EntityKind kind) {
  switch (kind) {
    case EntityKind::kVehicle: return "Vehicle";
    case EntityKind::kInfrastructure: return "Infrastructure";
    case EntityKind::kUser: return "User";
    case EntityKind::kCloudlet: return "Cloudlet";
    case EntityKind::kSystemWide: return "SystemWide";
  }
  return "Unknown";
}

EntityKind EntityKindFromString(std::string_view text) {
  if (text == "Vehicle") return EntityKind::kVehicle;
  if (text == "Infrastructure") return EntityKind::kInfrastructure;
  if (text == "User") return EntityKind::kUser;
  if (text == "Cloudlet" || text == "TC") return EntityKind::kCloudlet;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown entity kind '" + std::string(text) + "'");
}

std::string ToString(EntityId const& id) {
  return std::string(ToString(id.kind)) + ":" + id.name;
}

std::string_view ToString(AttributeType type) {
  return type == AttributeType::kSet ? "set" : "atomic";
}

AttributeStore::AttributeStore() { entities_.insert(EntityId::System()); }

void AttributeStore::DeclareAttribute(AttributeSchema schema) {
  if (schema.name.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "attribute name is empty");
  }
  if (schemas_.contains(schema.name)) {
    throw Error(ErrorCode::kDuplicateAttribute,
                "attribute '" + schema.name + "' already declared");
  }
  if (schema.range.empty()) {
    throw Error(ErrorCode::kEmptyRange,
                "attribute '" + schema.name + "' has an empty range");
  }
  AtomSet seen(schema.range.begin(), schema.range.end());
  if (seen.size() != schema.range.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "attribute '" + schema.name + "' has duplicate range values");
  }
  auto name = schema.name;
  schemas_.emplace(std::move(name), std::move(schema));
}

bool AttributeStore::HasAttribute(std::string const& name) const {
  return schemas_.contains(name);
}

AttributeSchema const& AttributeStore::Schema(std::string const& name) const {
  auto it = schemas_.find(name);
  if (it == schemas_.end()) {
    throw Error(ErrorCode::kUnknownAttribute, "unknown attribute '" + name + "'");
  }
  return it->second;
}

std::vector<AttributeSchema> AttributeStore::Schemas() const {
  std::vector<AttributeSchema> out;
  for (auto const& [_, s] : schemas_) out.push_back(s);
  return out;
}

AttributeSchema const& AttributeStore::SchemaOrThrow(std::string const& name,
                                                     AttributeType expected) const {
  auto const& schema = Schema(name);
  if (schema.type != expected) {
    throw Error(ErrorCode::kTypeMismatch,
                "attribute '" + name + "' is " + std::string(ToString(schema.type)) +
                    ", not " + std::string(ToString(expected)));
  }
  return schema;
}

void AttributeStore::AddEntity(EntityId const& id) {
  if (id.name.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "entity name is empty");
  }
  if (id.kind == EntityKind::kSystemWide) {
    throw Error(ErrorCode::kDuplicateEntity, "the system-wide entity is a singleton");
  }
  if (!entities_.insert(id).second) {
    throw Error(ErrorCode::kDuplicateEntity, "entity " + ToString(id) + " exists");
  }
}

bool AttributeStore::HasEntity(EntityId const& id) const {
  return entities_.contains(id);
}

std::vector<EntityId> AttributeStore::Entities() const {
  return {entities_.begin(), entities_.end()};
}

EntityId AttributeStore::Resolve(std::string_view name) const {
  if (name == "system") return EntityId::System();
  std::vector<EntityId> hits;
  for (auto const& e : entities_) {
    if (e.name == name && e.kind != EntityKind::kSystemWide) hits.push_back(e);
  }
  if (hits.empty()) {
    throw Error(ErrorCode::kUnknownEntity, "unknown entity '" + std::string(name) + "'");
  }
  if (hits.size() > 1) {
    throw Error(ErrorCode::kUnknownEntity,
                "entity name '" + std::string(name) + "' is ambiguous across kinds");
  }
  return hits.front();
}

void AttributeStore::RequireEntity(EntityId const& id) const {
  if (!entities_.contains(id)) {
    throw Error(ErrorCode::kUnknownEntity, "unknown entity " + ToString(id));
  }
}

void AttributeStore::SetAttribute(EntityId const& entity,
                                  std::string const& attribute,
                                  AttributeValue const& value) {
  RequireEntity(entity);
  auto const& schema = Schema(attribute);
  AtomSet range(schema.range.begin(), schema.range.end());
  Key key{entity, attribute};

  if (schema.type == AttributeType::kSet) {
    auto const* set = std::get_if<AtomSet>(&value);
    if (set == nullptr) {
      throw Error(ErrorCode::kTypeMismatch,
                  "attribute '" + attribute + "' is set-valued");
    }
    for (auto const& a : *set) {
      if (!range.contains(a)) {
        throw Error(ErrorCode::kOutOfRange, a.ToLiteral() + " is outside Range(" +
                                                attribute + ")");
      }
    }
    set_values_[key] = *set;
    return;
  }

  auto const* atomic = std::get_if<AtomicValue>(&value);
  if (atomic == nullptr) {
    throw Error(ErrorCode::kTypeMismatch,
                "attribute '" + attribute + "' is atomic-valued");
  }
  if (!atomic->has_value()) {
    atomic_values_.erase(key);
    stamps_.erase(key);
    return;
  }
  if (!range.contains(**atomic)) {
    throw Error(ErrorCode::kOutOfRange,
                (*atomic)->ToLiteral() + " is outside Range(" + attribute + ")");
  }
  atomic_values_[key] = **atomic;
  if (entity.kind == EntityKind::kCloudlet) stamps_[key] = ++clock_;
}

AttributeValue AttributeStore::Direct(EntityId const& entity,
                                      std::string const& attribute) const {
  if (Schema(attribute).type == AttributeType::kSet) {
    return DirectSet(entity, attribute);
  }
  return DirectAtomic(entity, attribute);
}

AtomSet AttributeStore::DirectSet(EntityId const& entity,
                                  std::string const& attribute) const {
  SchemaOrThrow(attribute, AttributeType::kSet);
  RequireEntity(entity);
  auto it = set_values_.find(Key{entity, attribute});
  return it == set_values_.end() ? AtomSet{} : it->second;
}

AtomicValue AttributeStore::DirectAtomic(EntityId const& entity,
                                         std::string const& attribute) const {
  SchemaOrThrow(attribute, AttributeType::kAtomic);
  RequireEntity(entity);
  auto it = atomic_values_.find(Key{entity, attribute});
  if (it == atomic_values_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t AttributeStore::AssignmentStamp(EntityId const& cloudlet,
                                              std::string const& attribute) const {
  auto it = stamps_.find(Key{cloudlet, attribute});
  return it == stamps_.end() ? 0 : it->second;
}

void AttributeStore::Associate(EntityId const& source, EntityId const& cloudlet) {
  RequireEntity(source);
  RequireEntity(cloudlet);
  if (!source.is_source()) {
    throw Error(ErrorCode::kInvalidArgument,
                ToString(source) + " cannot be associated with a cloudlet");
  }
  if (cloudlet.kind != EntityKind::kCloudlet) {
    throw Error(ErrorCode::kInvalidArgument, ToString(cloudlet) + " is not a cloudlet");
  }
  sea_[source][cloudlet] = ++join_clock_;
  members_[cloudlet].insert(source);
}

void AttributeStore::Dissociate(EntityId const& source, EntityId const& cloudlet) {
  RequireEntity(source);
  RequireEntity(cloudlet);
  auto it = sea_.find(source);
  if (it != sea_.end()) {
    it->second.erase(cloudlet);
    if (it->second.empty()) sea_.erase(it);
  }
  auto m = members_.find(cloudlet);
  if (m != members_.end()) {
    m->second.erase(source);
    if (m->second.empty()) members_.erase(m);
  }
}

std::set<EntityId> AttributeStore::AssociatedCloudlets(EntityId const& source) const {
  RequireEntity(source);
  std::set<EntityId> out;
  auto it = sea_.find(source);
  if (it == sea_.end()) return out;
  for (auto const& [tc, _] : it->second) out.insert(tc);
  return out;
}

std::set<EntityId> AttributeStore::Members(EntityId const& cloudlet) const {
  RequireEntity(cloudlet);
  auto it = members_.find(cloudlet);
  return it == members_.end() ? std::set<EntityId>{} : it->second;
}

std::uint64_t AttributeStore::JoinStamp(EntityId const& source,
                                        EntityId const& cloudlet) const {
  auto it = sea_.find(source);
  if (it == sea_.end()) return 0;
  auto jt = it->second.find(cloudlet);
  return jt == it->second.end() ? 0 : jt->second;
}

std::vector<std::pair<EntityId, EntityId>> AttributeStore::Associations() const {
  std::vector<std::pair<EntityId, EntityId>> out;
  for (auto const& [s, tcs] : sea_) {
    for (auto const& [tc, _] : tcs) out.emplace_back(s, tc);
  }
  return out;
}

AttributeValue AttributeStore::Effective(EntityId const& entity,
                                         std::string const& attribute) const {
  if (Schema(attribute).type == AttributeType::kSet) {
    return EffectiveSet(entity, attribute);
  }
  return EffectiveAtomic(entity, attribute);
}

AtomSet AttributeStore::EffectiveSet(EntityId const& entity,
                                     std::string const& attribute) const {
  auto out = DirectSet(entity, attribute);
  auto it = sea_.find(entity);
  if (it == sea_.end()) return out;
  for (auto const& [tc, _] : it->second) {
    auto v = set_values_.find(Key{tc, attribute});
    if (v != set_values_.end()) out.insert(v->second.begin(), v->second.end());
  }
  return out;
}

AtomicValue AttributeStore::EffectiveAtomic(EntityId const& entity,
                                            std::string const& attribute) const {
  auto direct = DirectAtomic(entity, attribute);
  auto it = sea_.find(entity);
  if (it == sea_.end()) return direct;
  std::uint64_t best = 0;
  AtomicValue winner;
  for (auto const& [tc, _] : it->second) {
    Key key{tc, attribute};
    auto v = atomic_values_.find(key);
    if (v == atomic_values_.end()) continue;
    auto stamp = stamps_.at(key);
    if (stamp > best) {
      best = stamp;
      winner = v->second;
    }
  }
  return winner.has_value() ? winner : direct;
}

}  // namespace cits
