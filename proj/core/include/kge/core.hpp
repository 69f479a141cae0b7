#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kge {

/// Raised for malformed or inconsistent user input (files, config, ids).
/// The CLI maps this to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a computation produces non-finite or contradictory values.
/// The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense indices, contiguous from 0 within one Vocabulary.
using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId rel = 0;
  EntityId tail = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    // splitmix-style mix of the three ids packed into two words
    std::uint64_t a = (std::uint64_t(t.head) << 32) | t.tail;
    std::uint64_t b = t.rel;
    a ^= b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2);
    a *= 0xbf58476d1ce4e5b9ull;
    a ^= a >> 27;
    a *= 0x94d049bb133111ebull;
    a ^= a >> 31;
    return static_cast<std::size_t>(a);
  }
};

/// A triple as read from disk, before interning.
struct RawTriple {
  std::string head;
  std::string rel;
  std::string tail;

  friend bool operator==(const RawTriple&, const RawTriple&) = default;
};

enum class Split : std::uint8_t { train = 0, valid = 1, test = 2, closure = 3 };

std::string_view to_string(Split s);

using SplitMask = std::uint8_t;

constexpr SplitMask split_bit(Split s) {
  return static_cast<SplitMask>(1u << static_cast<std::uint8_t>(s));
}
constexpr SplitMask kAllSplits = 0x0f;

/// Bidirectional mapping between surface identifiers and dense ids.
/// Ids are assigned in first-seen order; round trip name -> id -> name
/// is identity.
class Vocabulary {
 public:
  EntityId intern_entity(std::string_view name);
  RelationId intern_relation(std::string_view name);

  std::optional<EntityId> entity_id(std::string_view name) const;
  std::optional<RelationId> relation_id(std::string_view name) const;

  const std::string& entity_name(EntityId id) const;
  const std::string& relation_name(RelationId id) const;

  std::size_t entity_count() const { return entity_names_.size(); }
  std::size_t relation_count() const { return relation_names_.size(); }

  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, EntityId> entity_index_;
  std::unordered_map<std::string, RelationId> relation_index_;
};

/// Deduplicated ordered triples with split tags and O(1) average containment.
class TripleStore {
 public:
  /// Returns false (and stores nothing) if (t, split) is already present.
  bool insert(Triple t, Split split = Split::train);

  /// True iff t is present in any split selected by the mask.
  bool contains(const Triple& t, SplitMask mask = kAllSplits) const;

  const std::vector<Triple>& triples() const { return triples_; }
  Split split_of(std::size_t index) const { return splits_[index]; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }

  std::vector<Triple> triples_in(Split split) const;

  /// Largest entity / relation id present, plus one. Zero when empty.
  std::size_t max_entity_bound() const { return entity_bound_; }
  std::size_t max_relation_bound() const { return relation_bound_; }

 private:
  std::vector<Triple> triples_;
  std::vector<Split> splits_;
  std::unordered_map<Triple, SplitMask, TripleHash> index_;
  std::size_t entity_bound_ = 0;
  std::size_t relation_bound_ = 0;
};

/// Per-entity semantic type and group assignments. Types and groups are
/// interned; each type belongs to exactly one group, so an entity's group
/// is derived from its type.
class SemanticLabels {
 public:
  /// The eight default broad semantic groups.
  static const std::vector<std::string>& default_groups();

  std::int32_t intern_group(std::string_view group);
  /// Interns `type` under `group`. Re-interning with a different group is an error.
  std::int32_t intern_type(std::string_view type, std::string_view group);

  /// Assigns a type to an entity. Reassignment with a different type is an error.
  void assign(EntityId entity, std::int32_t type_id);

  bool has(EntityId entity) const;
  std::int32_t type_of(EntityId entity) const;   // -1 when unlabeled
  std::int32_t group_of(EntityId entity) const;  // -1 when unlabeled

  const std::string& type_name(std::int32_t id) const { return type_names_.at(id); }
  const std::string& group_name(std::int32_t id) const { return group_names_.at(id); }
  std::int32_t group_of_type(std::int32_t type_id) const { return group_of_type_.at(type_id); }

  std::optional<std::int32_t> group_id(std::string_view name) const;
  std::optional<std::int32_t> type_id(std::string_view name) const;

  std::size_t type_count() const { return type_names_.size(); }
  std::size_t group_count() const { return group_names_.size(); }
  std::size_t labeled_count() const { return type_of_entity_.size(); }

 private:
  std::vector<std::string> type_names_;
  std::vector<std::string> group_names_;
  std::vector<std::int32_t> group_of_type_;
  std::unordered_map<std::string, std::int32_t> type_index_;
  std::unordered_map<std::string, std::int32_t> group_index_;
  std::unordered_map<EntityId, std::int32_t> type_of_entity_;
};

/// Interns every distinct head/tail and relation string in first-seen order.
Vocabulary build_vocabulary(std::span<const RawTriple> raw);

struct EncodeStats {
  std::size_t duplicates_dropped = 0;
};

/// Encodes raw triples against an existing vocabulary, deduplicating within
/// the split. Unknown strings raise InputError naming the line and string.
TripleStore encode_triples(std::span<const RawTriple> raw, const Vocabulary& vocab,
                           Split split = Split::train, EncodeStats* stats = nullptr);

/// Decodes back to surface strings in store order.
std::vector<RawTriple> decode_triples(const TripleStore& store, const Vocabulary& vocab);

}  // namespace kge
