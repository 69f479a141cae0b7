#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kge/core.hpp"
#include "kge/tsv.hpp"

namespace kge {

/// Column layout of the pipe-delimited release files. Defaults follow the
/// 2019AB RRF standard; every index is configurable because deployments vary.
struct RrfColumns {
  // concepts file (MRCONSO-shaped)
  std::size_t concept_id = 0;
  std::size_t concept_source = 11;
  std::size_t concept_suppress = 16;
  // relations file (MRREL-shaped)
  std::size_t rel_id1 = 0;
  std::size_t rel_label = 3;
  std::size_t rel_id2 = 4;
  std::size_t rel_attribute = 7;
  std::size_t rel_source = 10;
  std::size_t rel_suppress = 14;
  // semantic types file (MRSTY-shaped)
  std::size_t sty_id = 0;
  std::size_t sty_type = 3;
};

/// Filtering policy for subsetting a release to one source vocabulary and
/// a closed set of semantic groups.
struct RrfConfig {
  RrfColumns columns;
  /// Keep only rows whose source field equals this (empty = keep all).
  std::string source_filter;
  /// Rows whose suppression flag is in this set are dropped.
  std::set<std::string> suppressed_flags = {"O", "E", "Y"};
  /// Concepts outside these groups are dropped. Empty = the 8 defaults.
  std::set<std::string> allowed_groups;
  /// Concepts of these semantic types are dropped even if the group matches.
  std::set<std::string> excluded_types;
  /// Relation rows relate the second concept to the first; set to emit
  /// (first, label, second) instead.
  bool flip_direction = false;

  const std::set<std::string>& effective_groups() const;
};

/// type-or-TUI string -> semantic group abbreviation.
using TypeGroupMap = std::unordered_map<std::string, std::string>;

/// Parses a semantic-groups table: `GROUP|Group Name|TUI|Type Name` per row.
/// Both the TUI and the type name are mapped to the group.
TypeGroupMap load_semantic_groups(const std::filesystem::path& path);

/// Concept identifiers whose source matches the filter and whose suppression
/// flag is not excluded.
std::unordered_set<std::string> parse_concepts(const std::filesystem::path& path,
                                               const RrfConfig& cfg);

/// Emits (head, label, tail) for rows whose endpoints are both in `concepts`,
/// using the specific relation attribute when present, else the generic label.
std::vector<RawTriple> parse_relations(const std::filesystem::path& path, const RrfConfig& cfg,
                                       const std::unordered_set<std::string>& concepts);

struct SemanticsResult {
  /// (entity, type, group) in first-retained order, one row per concept.
  std::vector<LabelRow> labels;
  /// Concepts with more than one type row; first retained row wins.
  std::size_t multi_typed = 0;
  /// Concepts dropped because their group is not allowed or type excluded.
  std::size_t dropped = 0;
};

/// Assigns (type, group) per concept and shrinks `concepts` to those whose
/// group is allowed and type not excluded. A type missing from `group_map`
/// raises InputError listing the type.
SemanticsResult parse_semantics(const std::filesystem::path& path, const RrfConfig& cfg,
                                const TypeGroupMap& group_map,
                                std::unordered_set<std::string>& concepts);

struct ClosureLoadResult {
  TripleStore store;  // split tag Split::closure
  std::size_t skipped_unknown = 0;
};

/// Loads hierarchy-closure triples for evaluation filtering. Rows referencing
/// entities or relations missing from the vocabulary are skipped and counted.
ClosureLoadResult load_closure(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace kge
