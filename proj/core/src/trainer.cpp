#include "kge/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "kge/eval.hpp"

namespace kge {

namespace {

constexpr std::uint64_t kSaltInit = 0x696e6974;      // per-component seed salts
constexpr std::uint64_t kSaltEpoch = 0x65706f63;
constexpr std::uint64_t kSaltShuffle = 0x73687566;
constexpr std::uint64_t kSaltValid = 0x76616c64;

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double log_sigmoid(double x) { return -softplus(-x); }

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate < 0) throw InputError("learning rate must be >= 0");
  if (num_negative == 0) throw InputError("num_negative must be >= 1");
  if (batch_size == 0) throw InputError("batch size must be >= 1");
  if (eval_every == 0) throw InputError("eval_every must be >= 1");
  if (worker_count == 0) throw InputError("worker count must be >= 1");
}

std::vector<Triple> sample_negatives(const Triple& positive, std::size_t n,
                                     std::size_t num_entities, Rng& rng) {
  if (num_entities < 2) throw InputError("negative sampling needs at least 2 entities");
  std::vector<Triple> negatives;
  negatives.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Triple corrupted = positive;
    const bool corrupt_head = uniform_below(rng, 2) == 0;
    EntityId replacement;
    const EntityId original = corrupt_head ? positive.head : positive.tail;
    do {
      replacement = static_cast<EntityId>(uniform_below(rng, num_entities));
    } while (replacement == original);  // rejects exactly the positive triple
    if (corrupt_head) {
      corrupted.head = replacement;
    } else {
      corrupted.tail = replacement;
    }
    negatives.push_back(corrupted);
  }
  return negatives;
}

LossResult adversarial_loss(double positive_score, std::span<const double> negative_scores,
                            double alpha) {
  const std::size_t k = negative_scores.size();
  if (k == 0) throw InputError("loss needs at least one negative score");

  LossResult result;
  result.negative_weights.resize(k);

  // p = softmax(alpha * s-), computed with max subtraction
  std::vector<double> p(k);
  double max_scaled = -HUGE_VAL;
  for (std::size_t i = 0; i < k; ++i) max_scaled = std::max(max_scaled, alpha * negative_scores[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = std::exp(alpha * negative_scores[i] - max_scaled);
    z += p[i];
  }
  for (std::size_t i = 0; i < k; ++i) p[i] /= z;

  double weighted_neg_term = 0.0;  // sum_k p_k log sig(-s_k)
  for (std::size_t i = 0; i < k; ++i) weighted_neg_term += p[i] * log_sigmoid(-negative_scores[i]);
  result.value = -log_sigmoid(positive_score) - weighted_neg_term;

  result.positive_weight = -stable_sigmoid(-positive_score);
  // dL/ds_j = p_j sig(s_j) - alpha p_j (log sig(-s_j) - sum_k p_k log sig(-s_k))
  for (std::size_t j = 0; j < k; ++j) {
    const double lj = log_sigmoid(-negative_scores[j]);
    result.negative_weights[j] =
        p[j] * stable_sigmoid(negative_scores[j]) - alpha * p[j] * (lj - weighted_neg_term);
  }
  return result;
}

namespace {

/// Per-triple gradient accumulator over the touched rows. Rows are keyed by
/// insertion order (small linear scans) so application order is fixed.
class RowAccumulator {
 public:
  void reset(std::size_t entity_dim) {
    entity_dim_ = entity_dim;
    for (auto& [id, buf] : entity_rows_) pool_.push_back(std::move(buf));
    entity_rows_.clear();
  }

  std::vector<double>& entity_row(EntityId id) {
    for (auto& [row_id, buf] : entity_rows_) {
      if (row_id == id) return buf;
    }
    std::vector<double> buf;
    if (!pool_.empty()) {
      buf = std::move(pool_.back());
      pool_.pop_back();
    }
    buf.assign(entity_dim_, 0.0);
    entity_rows_.emplace_back(id, std::move(buf));
    return entity_rows_.back().second;
  }

  std::vector<std::pair<EntityId, std::vector<double>>>& rows() { return entity_rows_; }

 private:
  std::size_t entity_dim_ = 0;
  std::vector<std::pair<EntityId, std::vector<double>>> entity_rows_;
  std::vector<std::vector<double>> pool_;
};

struct TripleWorkspace {
  std::vector<Triple> negatives;
  std::vector<double> negative_scores;
  TripleGradient grad;
  RowAccumulator acc;
  std::vector<double> rel_grad;
};

/// Computes the loss for one positive triple and applies one SGD step.
double train_one(EmbeddingTable& table, const Triple& positive, const TrainConfig& cfg,
                 const ModelConfig& model_cfg, Rng& rng, TripleWorkspace& ws) {
  ws.negatives = sample_negatives(positive, cfg.num_negative, table.num_entities, rng);

  const double positive_score = score(table, model_cfg, positive);
  ws.negative_scores.resize(ws.negatives.size());
  for (std::size_t i = 0; i < ws.negatives.size(); ++i) {
    ws.negative_scores[i] = score(table, model_cfg, ws.negatives[i]);
  }
  const LossResult loss =
      adversarial_loss(positive_score, ws.negative_scores, model_cfg.adversarial_temperature);

  // total-loss gradient at the current parameters, accumulated per row
  ws.acc.reset(table.entity_dim);
  ws.rel_grad.assign(table.relation_dim, 0.0);

  auto accumulate = [&](const Triple& t, double weight) {
    score_gradients(model_cfg, table.entity(t.head), table.relation(t.rel), table.entity(t.tail),
                    ws.grad);
    std::vector<double>& gh = ws.acc.entity_row(t.head);
    for (std::size_t i = 0; i < table.entity_dim; ++i) gh[i] += weight * ws.grad.head[i];
    std::vector<double>& gt = ws.acc.entity_row(t.tail);
    for (std::size_t i = 0; i < table.entity_dim; ++i) gt[i] += weight * ws.grad.tail[i];
    for (std::size_t i = 0; i < table.relation_dim; ++i)
      ws.rel_grad[i] += weight * ws.grad.rel[i];
  };
  accumulate(positive, loss.positive_weight);
  for (std::size_t k = 0; k < ws.negatives.size(); ++k) {
    accumulate(ws.negatives[k], loss.negative_weights[k]);
  }

  const double lr = cfg.learning_rate;
  const double lambda = model_cfg.l2_lambda;
  for (auto& [id, grad_row] : ws.acc.rows()) {
    std::span<double> row = table.entity(id);
    if (lambda > 0) {
      for (std::size_t i = 0; i < row.size(); ++i)
        row[i] -= lr * (grad_row[i] + lambda * row[i]);
    } else {
      for (std::size_t i = 0; i < row.size(); ++i) row[i] -= lr * grad_row[i];
    }
  }
  std::span<double> rel_row = table.relation(positive.rel);
  if (lambda > 0) {
    for (std::size_t i = 0; i < rel_row.size(); ++i)
      rel_row[i] -= lr * (ws.rel_grad[i] + lambda * rel_row[i]);
  } else {
    for (std::size_t i = 0; i < rel_row.size(); ++i) rel_row[i] -= lr * ws.rel_grad[i];
  }
  return loss.value;
}

}  // namespace

double train_epoch(EmbeddingTable& table, const TripleStore& train, const TrainConfig& cfg,
                   const ModelConfig& model_cfg, std::uint64_t epoch) {
  cfg.validate();
  const std::vector<Triple>& triples = train.triples();
  if (triples.empty()) throw InputError("train split is empty");

  const std::uint64_t epoch_seed = derive_seed(derive_seed(cfg.seed, kSaltEpoch), epoch);

  std::vector<std::uint32_t> order(triples.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng = make_rng(derive_seed(epoch_seed, kSaltShuffle));
  shuffle(std::span<std::uint32_t>(order), shuffle_rng);

  const std::size_t batch_count = (triples.size() + cfg.batch_size - 1) / cfg.batch_size;

  // Negatives for a batch depend only on (seed, epoch, batch index), so the
  // sampled corruptions are identical in serial and parallel modes; parallel
  // runs differ only through racy reads of in-flight updates.
  auto run_batch = [&](std::size_t batch, TripleWorkspace& ws, double& loss_sum,
                       std::size_t& seen) {
    Rng rng = make_rng(derive_seed(epoch_seed, batch + 1));
    const std::size_t begin = batch * cfg.batch_size;
    const std::size_t end = std::min(begin + cfg.batch_size, triples.size());
    for (std::size_t i = begin; i < end; ++i) {
      const Triple& positive = triples[order[i]];
      const double loss = train_one(table, positive, cfg, model_cfg, rng, ws);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch) + ", triple index " +
                           std::to_string(order[i]));
      }
      loss_sum += loss;
      ++seen;
    }
  };

  if (cfg.worker_count <= 1) {
    TripleWorkspace ws;
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t batch = 0; batch < batch_count; ++batch) {
      run_batch(batch, ws, loss_sum, seen);
    }
    return loss_sum / static_cast<double>(seen);
  }

  std::atomic<std::size_t> next_batch{0};
  std::atomic<bool> failed{false};
  std::vector<double> worker_loss(cfg.worker_count, 0.0);
  std::vector<std::size_t> worker_seen(cfg.worker_count, 0);
  std::vector<std::string> errors(cfg.worker_count);
  std::vector<std::thread> workers;
  workers.reserve(cfg.worker_count);
  for (std::size_t w = 0; w < cfg.worker_count; ++w) {
    workers.emplace_back([&, w] {
      TripleWorkspace ws;
      try {
        while (!failed.load(std::memory_order_relaxed)) {
          const std::size_t batch = next_batch.fetch_add(1);
          if (batch >= batch_count) break;
          run_batch(batch, ws, worker_loss[w], worker_seen[w]);
        }
      } catch (const std::exception& e) {
        errors[w] = e.what();
        failed.store(true);
      }
    });
  }
  for (std::thread& th : workers) th.join();
  if (failed.load()) {
    for (const std::string& e : errors) {
      if (!e.empty()) throw NumericError(e);
    }
    throw NumericError("training worker failed");
  }
  double loss_sum = 0.0;
  std::size_t seen = 0;
  for (std::size_t w = 0; w < cfg.worker_count; ++w) {
    loss_sum += worker_loss[w];
    seen += worker_seen[w];
  }
  return loss_sum / static_cast<double>(seen);
}

namespace {

/// Fixed seeded subsample of the validation store for checkpoint MRR.
TripleStore valid_subsample(const TripleStore& valid, std::size_t sample, std::uint64_t seed) {
  if (sample == 0 || valid.size() <= sample) {
    TripleStore all;
    for (const Triple& t : valid.triples()) all.insert(t, Split::valid);
    return all;
  }
  std::vector<std::uint32_t> order(valid.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = make_rng(derive_seed(seed, kSaltValid));
  shuffle(std::span<std::uint32_t>(order), rng);
  order.resize(sample);
  std::sort(order.begin(), order.end());
  TripleStore out;
  for (const std::uint32_t i : order) out.insert(valid.triples()[i], Split::valid);
  return out;
}

}  // namespace

TrainResult train(const DatasetSplits& data, const TrainConfig& cfg, const ModelConfig& model_cfg,
                  const Checkpoint* initial, const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  model_cfg.validate();
  if (!data.train || data.train->empty()) throw InputError("train split is missing or empty");
  if (!data.valid || data.valid->empty()) throw InputError("valid split is missing or empty");

  // counts must cover every id in any provided store
  std::size_t num_entities = std::max(data.train->max_entity_bound(),
                                      data.valid->max_entity_bound());
  std::size_t num_relations = std::max(data.train->max_relation_bound(),
                                       data.valid->max_relation_bound());
  if (data.test) {
    num_entities = std::max(num_entities, data.test->max_entity_bound());
    num_relations = std::max(num_relations, data.test->max_relation_bound());
  }

  EmbeddingTable table;
  std::uint64_t start_epoch = 0;
  if (initial) {
    if (initial->model.kind != model_cfg.kind || initial->model.dim != model_cfg.dim) {
      throw InputError("resume checkpoint does not match the requested model");
    }
    if (initial->table.num_entities < num_entities ||
        initial->table.num_relations < num_relations) {
      throw InputError("resume checkpoint is smaller than the dataset");
    }
    table = initial->table;
    start_epoch = initial->epoch;
  } else {
    table = init_table(model_cfg, num_entities, num_relations, derive_seed(cfg.seed, kSaltInit));
  }

  FilterSet filter;
  filter.add(*data.train);
  filter.add(*data.valid);
  if (data.test) filter.add(*data.test);
  if (data.closure) filter.add(*data.closure);

  const TripleStore valid_sample = valid_subsample(*data.valid, cfg.valid_sample, cfg.seed);
  auto validation_mrr = [&](const EmbeddingTable& t) {
    const RankingOutcome outcome =
        link_prediction(valid_sample, t, model_cfg, filter, LinkTarget::both, cfg.worker_count);
    return outcome.summary().mrr;
  };

  TrainResult result;
  result.best.model = model_cfg;
  result.best.epoch = start_epoch;
  result.best.valid_mrr = validation_mrr(table);
  result.best.table = table;
  if (initial) result.best.valid_mrr = std::max(result.best.valid_mrr, initial->valid_mrr);

  for (std::uint64_t epoch = start_epoch + 1; epoch <= cfg.num_epoch; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.mean_loss = train_epoch(table, *data.train, cfg, model_cfg, epoch);
    if (epoch % cfg.eval_every == 0 || epoch == cfg.num_epoch) {
      const double mrr = validation_mrr(table);
      log.valid_mrr = mrr;
      if (mrr > result.best.valid_mrr) {
        result.best.valid_mrr = mrr;
        result.best.epoch = epoch;
        result.best.table = table;
      }
    }
    if (on_epoch) on_epoch(log);
    result.log.push_back(std::move(log));
  }
  return result;
}

}  // namespace kge
