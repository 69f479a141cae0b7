#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kge/core.hpp"

namespace kge {

/// One row of a labels TSV: entity, semantic type, semantic group.
struct LabelRow {
  std::string entity;
  std::string type;
  std::string group;

  friend bool operator==(const LabelRow&, const LabelRow&) = default;
};

/// Reads `head<TAB>relation<TAB>tail` rows. UTF-8, no header, no quoting.
/// Tolerates trailing whitespace / CR and a missing final newline; blank
/// lines are skipped. Malformed rows raise InputError with the line number.
std::vector<RawTriple> read_triple_tsv(const std::filesystem::path& path);

void write_triple_tsv(const std::filesystem::path& path, std::span<const RawTriple> triples);
void write_triple_tsv(const std::filesystem::path& path, const TripleStore& store,
                      const Vocabulary& vocab);

/// Reads `entity<TAB>semantic_type<TAB>semantic_group` rows.
std::vector<LabelRow> read_labels_tsv(const std::filesystem::path& path);

void write_labels_tsv(const std::filesystem::path& path, std::span<const LabelRow> rows);

/// Builds id-keyed labels from raw rows against a vocabulary. Rows whose
/// entity is not in the vocabulary are skipped and counted.
SemanticLabels attach_labels(std::span<const LabelRow> rows, const Vocabulary& vocab,
                             std::size_t* skipped_unknown = nullptr);

}  // namespace kge
