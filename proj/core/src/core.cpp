#include "kge/core.hpp"

#include <algorithm>

namespace kge {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::valid:
      return "valid";
    case Split::test:
      return "test";
    case Split::closure:
      return "closure";
  }
  return "?";
}

EntityId Vocabulary::intern_entity(std::string_view name) {
  auto it = entity_index_.find(std::string(name));
  if (it != entity_index_.end()) return it->second;
  const EntityId id = static_cast<EntityId>(entity_names_.size());
  entity_names_.emplace_back(name);
  entity_index_.emplace(entity_names_.back(), id);
  return id;
}

RelationId Vocabulary::intern_relation(std::string_view name) {
  auto it = relation_index_.find(std::string(name));
  if (it != relation_index_.end()) return it->second;
  const RelationId id = static_cast<RelationId>(relation_names_.size());
  relation_names_.emplace_back(name);
  relation_index_.emplace(relation_names_.back(), id);
  return id;
}

std::optional<EntityId> Vocabulary::entity_id(std::string_view name) const {
  auto it = entity_index_.find(std::string(name));
  if (it == entity_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocabulary::relation_id(std::string_view name) const {
  auto it = relation_index_.find(std::string(name));
  if (it == relation_index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::entity_name(EntityId id) const {
  if (id >= entity_names_.size()) throw InputError("entity id out of range: " + std::to_string(id));
  return entity_names_[id];
}

const std::string& Vocabulary::relation_name(RelationId id) const {
  if (id >= relation_names_.size())
    throw InputError("relation id out of range: " + std::to_string(id));
  return relation_names_[id];
}

bool TripleStore::insert(Triple t, Split split) {
  const SplitMask bit = split_bit(split);
  auto [it, fresh] = index_.try_emplace(t, 0);
  if (it->second & bit) return false;
  it->second |= bit;
  triples_.push_back(t);
  splits_.push_back(split);
  entity_bound_ = std::max({entity_bound_, std::size_t(t.head) + 1, std::size_t(t.tail) + 1});
  relation_bound_ = std::max(relation_bound_, std::size_t(t.rel) + 1);
  return true;
}

bool TripleStore::contains(const Triple& t, SplitMask mask) const {
  auto it = index_.find(t);
  return it != index_.end() && (it->second & mask) != 0;
}

std::vector<Triple> TripleStore::triples_in(Split split) const {
  std::vector<Triple> out;
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    if (splits_[i] == split) out.push_back(triples_[i]);
  }
  return out;
}

const std::vector<std::string>& SemanticLabels::default_groups() {
  static const std::vector<std::string> groups = {"ANAT", "CHEM", "CONC", "DEVI",
                                                  "DISO", "PHEN", "PHYS", "PROC"};
  return groups;
}

std::int32_t SemanticLabels::intern_group(std::string_view group) {
  auto it = group_index_.find(std::string(group));
  if (it != group_index_.end()) return it->second;
  const std::int32_t id = static_cast<std::int32_t>(group_names_.size());
  group_names_.emplace_back(group);
  group_index_.emplace(group_names_.back(), id);
  return id;
}

std::int32_t SemanticLabels::intern_type(std::string_view type, std::string_view group) {
  const std::int32_t gid = intern_group(group);
  auto it = type_index_.find(std::string(type));
  if (it != type_index_.end()) {
    if (group_of_type_[it->second] != gid) {
      throw InputError("semantic type '" + std::string(type) + "' mapped to two groups: '" +
                       group_names_[group_of_type_[it->second]] + "' and '" + std::string(group) +
                       "'");
    }
    return it->second;
  }
  const std::int32_t id = static_cast<std::int32_t>(type_names_.size());
  type_names_.emplace_back(type);
  group_of_type_.push_back(gid);
  type_index_.emplace(type_names_.back(), id);
  return id;
}

void SemanticLabels::assign(EntityId entity, std::int32_t type_id) {
  if (type_id < 0 || type_id >= static_cast<std::int32_t>(type_names_.size()))
    throw InputError("type id out of range: " + std::to_string(type_id));
  auto [it, fresh] = type_of_entity_.try_emplace(entity, type_id);
  if (!fresh && it->second != type_id) {
    throw InputError("entity " + std::to_string(entity) + " labeled with two types: '" +
                     type_names_[it->second] + "' and '" + type_names_[type_id] + "'");
  }
}

bool SemanticLabels::has(EntityId entity) const { return type_of_entity_.count(entity) != 0; }

std::int32_t SemanticLabels::type_of(EntityId entity) const {
  auto it = type_of_entity_.find(entity);
  return it == type_of_entity_.end() ? -1 : it->second;
}

std::int32_t SemanticLabels::group_of(EntityId entity) const {
  const std::int32_t t = type_of(entity);
  return t < 0 ? -1 : group_of_type_[t];
}

std::optional<std::int32_t> SemanticLabels::group_id(std::string_view name) const {
  auto it = group_index_.find(std::string(name));
  if (it == group_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::int32_t> SemanticLabels::type_id(std::string_view name) const {
  auto it = type_index_.find(std::string(name));
  if (it == type_index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(std::span<const RawTriple> raw) {
  Vocabulary vocab;
  for (const RawTriple& t : raw) {
    vocab.intern_entity(t.head);
    vocab.intern_relation(t.rel);
    vocab.intern_entity(t.tail);
  }
  return vocab;
}

TripleStore encode_triples(std::span<const RawTriple> raw, const Vocabulary& vocab, Split split,
                           EncodeStats* stats) {
  TripleStore store;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const RawTriple& t = raw[i];
    const auto h = vocab.entity_id(t.head);
    if (!h)
      throw InputError("triple " + std::to_string(i + 1) + ": unknown entity '" + t.head + "'");
    const auto r = vocab.relation_id(t.rel);
    if (!r)
      throw InputError("triple " + std::to_string(i + 1) + ": unknown relation '" + t.rel + "'");
    const auto tl = vocab.entity_id(t.tail);
    if (!tl)
      throw InputError("triple " + std::to_string(i + 1) + ": unknown entity '" + t.tail + "'");
    if (!store.insert(Triple{*h, *r, *tl}, split)) ++dropped;
  }
  if (stats) stats->duplicates_dropped = dropped;
  return store;
}

std::vector<RawTriple> decode_triples(const TripleStore& store, const Vocabulary& vocab) {
  std::vector<RawTriple> out;
  out.reserve(store.size());
  for (const Triple& t : store.triples()) {
    out.push_back(
        {vocab.entity_name(t.head), vocab.relation_name(t.rel), vocab.entity_name(t.tail)});
  }
  return out;
}

}  // namespace kge
