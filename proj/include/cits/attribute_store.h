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

#ifndef CITS_ATTRIBUTE_STORE_H
#define CITS_ATTRIBUTE_STORE_H

#include "cits/atom.h"
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace cits {

enum class EntityKind { kVehicle, kInfrastructure, kUser, kCloudlet, kSystemWide };

std::string_view ToString(EntityKind kind);
/// Accepts "Vehicle", "Infrastructure", "User", "Cloudlet" (or "TC").
EntityKind EntityKindFromString(std::string_view text);

struct EntityId {
  EntityKind kind = EntityKind::kVehicle;
  std::string name;

  static EntityId Vehicle(std::string n) { return {EntityKind::kVehicle, std::move(n)}; }
  static EntityId Infrastructure(std::string n) {
    return {EntityKind::kInfrastructure, std::move(n)};
  }
  static EntityId User(std::string n) { return {EntityKind::kUser, std::move(n)}; }
  static EntityId Cloudlet(std::string n) { return {EntityKind::kCloudlet, std::move(n)}; }
  static EntityId System() { return {EntityKind::kSystemWide, "system"}; }

  bool is_source() const {
    return kind == EntityKind::kVehicle || kind == EntityKind::kInfrastructure ||
           kind == EntityKind::kUser;
  }

  friend auto operator<=>(EntityId const&, EntityId const&) = default;
};

std::string ToString(EntityId const& id);

enum class AttributeType { kSet, kAtomic };

std::string_view ToString(AttributeType type);

struct AttributeSchema {
  std::string name;
  AttributeType type = AttributeType::kAtomic;
  std::vector<Atom> range;
};

/// Either an atomic slot (possibly null) or a set of range elements.
using AttributeValue = std::variant<AtomicValue, AtomSet>;

/// Entity registry, attribute valuations and the source-to-cloudlet
/// association relation. Plain value type; not synchronized. See
/// SharedAttributeStore for the concurrent wrapper.
///
/// Atomic values assigned to cloudlets carry a store-wide monotonic stamp.
/// A source's effective atomic value is the value of its associated cloudlet
/// with the greatest stamp among non-null values, falling back to the
/// source's own value when every associated cloudlet is null.
class AttributeStore {
 public:
  AttributeStore();

  void DeclareAttribute(AttributeSchema schema);
  bool HasAttribute(std::string const& name) const;
  AttributeSchema const& Schema(std::string const& name) const;
  std::vector<AttributeSchema> Schemas() const;

  void AddEntity(EntityId const& id);
  bool HasEntity(EntityId const& id) const;
  std::vector<EntityId> Entities() const;
  /// Looks up an entity by bare name. "system" resolves to the system-wide
  /// entity. Throws kUnknownEntity if absent or ambiguous across kinds.
  EntityId Resolve(std::string_view name) const;

  void SetAttribute(EntityId const& entity, std::string const& attribute,
                    AttributeValue const& value);
  void SetAtomic(EntityId const& entity, std::string const& attribute,
                 AtomicValue const& value) {
    SetAttribute(entity, attribute, AttributeValue(value));
  }
  void SetSet(EntityId const& entity, std::string const& attribute,
              AtomSet const& value) {
    SetAttribute(entity, attribute, AttributeValue(value));
  }

  AttributeValue Direct(EntityId const& entity, std::string const& attribute) const;
  AtomSet DirectSet(EntityId const& entity, std::string const& attribute) const;
  AtomicValue DirectAtomic(EntityId const& entity, std::string const& attribute) const;
  /// Stamp of the latest non-null atomic assignment to a cloudlet, 0 if none.
  std::uint64_t AssignmentStamp(EntityId const& cloudlet,
                                std::string const& attribute) const;

  void Associate(EntityId const& source, EntityId const& cloudlet);
  void Dissociate(EntityId const& source, EntityId const& cloudlet);
  std::set<EntityId> AssociatedCloudlets(EntityId const& source) const;
  std::set<EntityId> Members(EntityId const& cloudlet) const;
  std::uint64_t JoinStamp(EntityId const& source, EntityId const& cloudlet) const;
  std::vector<std::pair<EntityId, EntityId>> Associations() const;

  /// Effective values. For cloudlets and the system-wide entity, which have
  /// no associations, these equal the direct value.
  AttributeValue Effective(EntityId const& entity, std::string const& attribute) const;
  AtomSet EffectiveSet(EntityId const& entity, std::string const& attribute) const;
  AtomicValue EffectiveAtomic(EntityId const& entity, std::string const& attribute) const;

 private:
  using Key = std::pair<EntityId, std::string>;

  AttributeSchema const& SchemaOrThrow(std::string const& name,
                                       AttributeType expected) const;
  void RequireEntity(EntityId const& id) const;

  std::map<std::string, AttributeSchema> schemas_;
  std::set<EntityId> entities_;
  std::map<Key, AtomSet> set_values_;
  std::map<Key, Atom> atomic_values_;
  std::map<Key, std::uint64_t> stamps_;
  std::uint64_t clock_ = 0;
  std::map<EntityId, std::map<EntityId, std::uint64_t>> sea_;
  std::map<EntityId, std::set<EntityId>> members_;
  std::uint64_t join_clock_ = 0;
};

/// Many concurrent readers, serialized writers. A Read() callback sees one
/// consistent snapshot of valuations and associations.
class SharedAttributeStore {
 public:
  SharedAttributeStore() = default;
  explicit SharedAttributeStore(AttributeStore store) : store_(std::move(store)) {}

  template <typename F>
  decltype(auto) Read(F&& f) const {
    std::shared_lock lock(mu_);
    return std::forward<F>(f)(static_cast<AttributeStore const&>(store_));
  }

  template <typename F>
  decltype(auto) Write(F&& f) {
    std::unique_lock lock(mu_);
    return std::forward<F>(f)(store_);
  }

  AttributeStore Copy() const {
    std::shared_lock lock(mu_);
    return store_;
  }

 private:
  mutable std::shared_mutex mu_;
  AttributeStore store_;
};

}  // namespace cits

#endif  // CITS_ATTRIBUTE_STORE_H
