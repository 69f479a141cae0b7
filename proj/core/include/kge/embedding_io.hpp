#pragma once

#include <filesystem>

#include "kge/probe.hpp"
#include "kge/trainer.hpp"

namespace kge {

// Checkpoint binary layout (all integers little-endian):
//   0   8  magic "KGECKP01"
//   8   4  u32 model kind
//  12   4  u32 norm order
//  16   8  u64 dim
//  24   8  u64 num entities
//  32   8  u64 num relations
//  40   8  f64 margin
//  48   8  f64 adversarial temperature
//  56   8  f64 l2 coefficient
//  64   8  u64 epoch
//  72   8  f64 validation MRR
//  80   .. entity rows as f32, then relation rows as f32
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

enum class ExportFormat { tsv, binary };
enum class ExportWhat { entities, relations };

/// TSV: header `<count> <dim>` (plus `complex` when rows interleave re/im),
/// then `name v1 ... vd` per line, space-separated.
/// Binary: magic "KGEEMB01", u64 count, u64 dim, u8 complex flag,
/// length-prefixed names, then the f32 block; reloads bitwise.
void export_embeddings(const std::filesystem::path& path, const Checkpoint& ckpt,
                       const Vocabulary& vocab, ExportFormat format, ExportWhat what);

EmbeddingSet load_embedding_file(const std::filesystem::path& path);

}  // namespace kge
