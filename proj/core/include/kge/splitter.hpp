#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kge/core.hpp"

namespace kge {

/// Partial involution pairing reciprocal relation types (ISA <-> INVERSE_ISA).
/// A relation paired with itself is explicitly symmetric.
class ReciprocalMap {
 public:
  /// Adds a pair; conflicting pairs raise InputError.
  void add(RelationId a, RelationId b);

  /// Resolves name pairs against the vocabulary. Pairs naming relations
  /// absent from the vocabulary are skipped and counted.
  static ReciprocalMap from_names(std::span<const std::pair<std::string, std::string>> pairs,
                                  const Vocabulary& vocab, std::size_t* skipped = nullptr);

  std::optional<RelationId> partner(RelationId r) const;
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }

 private:
  std::unordered_map<RelationId, RelationId> map_;
};

/// Reads `relation_a<TAB>relation_b` rows.
std::vector<std::pair<std::string, std::string>> read_reciprocal_pairs(
    const std::filesystem::path& path);

struct SplitSpec {
  double train_fraction = 0.9;
  double valid_fraction = 0.05;
  double test_fraction = 0.05;
  std::uint64_t seed = 0;

  /// Fractions must be positive and sum to 1 within 1e-9.
  void validate() const;
};

/// Indices into the source store; a group is a triple plus, when present,
/// its reciprocal. Groups never straddle splits.
struct TripleGroup {
  std::uint32_t first = 0;
  std::int64_t second = -1;  // -1 when the reciprocal is absent

  std::size_t size() const { return second < 0 ? 1 : 2; }
};

/// Partitions the store into reciprocal groups: each triple appears in
/// exactly one group; (h,r,t) is grouped with (t, partner(r), h) when that
/// triple is present.
std::vector<TripleGroup> pair_reciprocals(const TripleStore& store, const ReciprocalMap& map);

struct SplitResult {
  TripleStore train;
  TripleStore valid;
  TripleStore test;
};

/// Assigns whole groups to splits after a seeded shuffle, targeting the
/// spec fractions by triple count. Deterministic given the seed; realized
/// fractions are within max-group-size / total of spec.
SplitResult split(const TripleStore& store, std::span<const TripleGroup> groups,
                  const SplitSpec& spec);

struct RepairStats {
  std::size_t moved_from_valid = 0;
  std::size_t moved_from_test = 0;
  std::size_t passes = 0;
};

/// Moves valid/test triples whose entities or relations never occur in train
/// into train, iterating to a fixed point. Order is deterministic (ascending
/// triple index, valid before test). When a reciprocal map is given, a moved
/// triple takes its reciprocal partner along so no pair straddles splits.
RepairStats repair_unseen(TripleStore& train, TripleStore& valid, TripleStore& test,
                          const ReciprocalMap* reciprocals = nullptr);

/// Entities and relations of `probe` that never occur in `base`.
struct UnseenCounts {
  std::size_t entities = 0;
  std::size_t relations = 0;
};
UnseenCounts count_unseen(const TripleStore& base, const TripleStore& probe);

}  // namespace kge
