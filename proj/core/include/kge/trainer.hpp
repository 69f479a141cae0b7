#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kge/core.hpp"
#include "kge/models.hpp"
#include "kge/rng.hpp"

namespace kge {

struct TrainConfig {
  double learning_rate = 5e-4;  // from the tuning grid
  std::size_t num_negative = 60;
  std::size_t num_epoch = 2000;
  std::size_t batch_size = 1024;
  /// Epochs between validation evaluations; the final epoch always evaluates.
  std::size_t eval_every = 50;
  /// Validation triples used for checkpoint MRR; 0 = use all.
  std::size_t valid_sample = 5000;
  std::uint64_t seed = 0;
  /// 1 = deterministic mode (bitwise reproducible); >1 = hogwild-style
  /// workers with unsynchronized sparse updates.
  std::size_t worker_count = 1;

  void validate() const;
};

/// Embedding snapshot taken when validation MRR improves.
struct Checkpoint {
  EmbeddingTable table;
  ModelConfig model;
  std::uint64_t epoch = 0;
  double valid_mrr = 0.0;
};

struct EpochLog {
  std::uint64_t epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> valid_mrr;
};

/// Corrupts head or tail (fair coin) with a uniformly random entity,
/// rejecting only the positive triple itself. Corruptions may collide with
/// other true triples; filtering happens at evaluation, not here.
std::vector<Triple> sample_negatives(const Triple& positive, std::size_t n,
                                     std::size_t num_entities, Rng& rng);

/// Self-adversarial negative-sampling log-sigmoid loss:
///   L = -log sig(s+) - sum_k p_k log sig(-s_k),  p = softmax(alpha * s-).
/// Returns the loss and its full derivative with respect to each score
/// (including the softmax dependency on the negative scores), so the
/// weights match finite differences of the value. alpha = 0 gives uniform
/// weights 1/K.
struct LossResult {
  double value = 0.0;
  double positive_weight = 0.0;           // dL/ds+
  std::vector<double> negative_weights;   // dL/ds-_k
};
LossResult adversarial_loss(double positive_score, std::span<const double> negative_scores,
                            double alpha);

/// One pass over the shuffled train triples; per triple: sample negatives,
/// chain loss weights through score gradients, apply one SGD step
/// (param -= lr * grad), with the optional L2 penalty on touched rows only.
/// Returns mean loss. Raises NumericError with epoch/batch/triple context
/// on non-finite loss.
double train_epoch(EmbeddingTable& table, const TripleStore& train, const TrainConfig& cfg,
                   const ModelConfig& model_cfg, std::uint64_t epoch);

struct DatasetSplits {
  const TripleStore* train = nullptr;
  const TripleStore* valid = nullptr;
  const TripleStore* test = nullptr;     // optional, joins the filter
  const TripleStore* closure = nullptr;  // optional, joins the filter
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
};

/// Full training loop: evaluates filtered validation MRR (target both) on a
/// fixed seeded subsample every eval_every epochs and keeps the best
/// checkpoint. With num_epoch = 0 returns the initialized table with its
/// baseline MRR recorded. `initial` resumes from a prior checkpoint.
TrainResult train(const DatasetSplits& data, const TrainConfig& cfg, const ModelConfig& model_cfg,
                  const Checkpoint* initial = nullptr,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace kge
