#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kge/core.hpp"
#include "kge/rng.hpp"
#include "kge/tsv.hpp"

namespace kge {

/// Row-major dense feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
};

/// Fixed linear-probe recipe: one linear layer with input dropout, trained
/// by cross-entropy SGD with no further tuning.
struct ProbeConfig {
  double dropout = 0.1;
  double train_fraction = 0.9;
  std::size_t epochs = 100;
  double learning_rate = 0.1;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class LabelKind { semantic_type, semantic_group };
std::string_view to_string(LabelKind kind);

struct SplitIndices {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> test;
};

/// Per-class seeded 9:1 split; every class lands in train (rare classes may
/// be absent from test). Depends only on (labels, fraction, seed), so it is
/// byte-identical across models.
SplitIndices stratified_split(std::span<const std::int32_t> labels, double train_fraction,
                              std::uint64_t seed);

struct ClassifyResult {
  double accuracy = 0.0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t class_count = 0;
};

/// Trains the linear probe on features/labels and reports held-out accuracy.
/// Deterministic per seed. Labels must be dense ids 0..C-1.
ClassifyResult classify(const FeatureMatrix& features, std::span<const std::int32_t> labels,
                        const ProbeConfig& cfg);

/// One bootstrap-power task: observed related pairs plus per-side category
/// pools (row indices into the feature matrix).
struct PowerTask {
  std::string name;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> observed;
  std::vector<std::uint32_t> head_pool;
  std::vector<std::uint32_t> tail_pool;
  std::size_t sample_count = 10000;
  double percentile = 95.0;

  void validate() const;
};

struct PowerResult {
  double power = 0.0;
  double threshold = 0.0;
};

/// Null distribution: cosine similarities of `sample_count` pairs drawn
/// uniformly with replacement from the two pools; threshold is the
/// nearest-rank percentile; power is the fraction of observed pairs whose
/// cosine similarity exceeds it. A zero vector raises InputError naming the
/// row.
PowerResult bootstrap_power(const FeatureMatrix& features, const PowerTask& task, Rng& rng);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// One model's named embeddings, as loaded from an export file.
struct EmbeddingSet {
  std::string name;
  std::vector<std::string> entities;
  FeatureMatrix features;
};

/// Entities covered by every model and carrying a label, with per-model
/// features aligned to one shared entity order so probe accuracies are
/// comparable.
struct ProbeDataset {
  std::vector<std::string> entities;
  std::vector<FeatureMatrix> per_model;  // aligned to `entities`
  std::vector<std::int32_t> type_ids;
  std::vector<std::int32_t> group_ids;
  std::vector<std::string> type_names;
  std::vector<std::string> group_names;
  std::size_t unlabeled_dropped = 0;
};

ProbeDataset build_probe_dataset(std::span<const EmbeddingSet> models,
                                 std::span<const LabelRow> labels);

/// Rows of a power task file: head, tail, relationship label, head category,
/// tail category.
struct PowerTaskRow {
  std::string head;
  std::string tail;
  std::string label;
  std::string head_category;
  std::string tail_category;
};

std::vector<PowerTaskRow> read_power_tasks(const std::filesystem::path& path);

/// Groups rows by (label, head category, tail category) — one null
/// distribution per task — and resolves pools against the embedding set.
/// Categories name semantic groups first, then semantic types.
std::vector<PowerTask> build_power_tasks(std::span<const PowerTaskRow> rows,
                                         const EmbeddingSet& model,
                                         std::span<const LabelRow> labels,
                                         std::size_t sample_count, double percentile);

}  // namespace kge
