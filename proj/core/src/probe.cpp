#include "kge/probe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace kge {

void ProbeConfig::validate() const {
  if (dropout < 0 || dropout >= 1) throw InputError("dropout must be in [0, 1)");
  if (train_fraction <= 0 || train_fraction >= 1)
    throw InputError("train fraction must be in (0, 1)");
  if (epochs == 0 || batch_size == 0) throw InputError("epochs and batch size must be positive");
  if (learning_rate <= 0) throw InputError("probe learning rate must be positive");
}

std::string_view to_string(LabelKind kind) {
  return kind == LabelKind::semantic_type ? "semantic_type" : "semantic_group";
}

SplitIndices stratified_split(std::span<const std::int32_t> labels, double train_fraction,
                              std::uint64_t seed) {
  std::int32_t max_class = -1;
  for (const std::int32_t y : labels) {
    if (y < 0) throw InputError("negative class label");
    max_class = std::max(max_class, y);
  }
  std::vector<std::vector<std::uint32_t>> by_class(max_class + 1);
  for (std::uint32_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  SplitIndices split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    std::vector<std::uint32_t>& members = by_class[c];
    if (members.empty()) continue;
    Rng rng = make_rng(derive_seed(seed, 0x73706c69 + c));
    shuffle(std::span<std::uint32_t>(members), rng);
    std::size_t train_n =
        static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
    train_n = std::clamp<std::size_t>(train_n, 1, members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < train_n ? split.train : split.test).push_back(members[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

ClassifyResult classify(const FeatureMatrix& features, std::span<const std::int32_t> labels,
                        const ProbeConfig& cfg) {
  cfg.validate();
  if (features.rows != labels.size()) throw InputError("feature/label size mismatch");
  if (features.rows == 0) throw InputError("empty probe dataset");

  const SplitIndices split = stratified_split(labels, cfg.train_fraction, cfg.seed);
  if (split.test.empty()) throw InputError("probe test split is empty; dataset too small");

  std::int32_t max_class = 0;
  for (const std::int32_t y : labels) max_class = std::max(max_class, y);
  const std::size_t classes = static_cast<std::size_t>(max_class) + 1;
  const std::size_t d = features.cols;

  std::vector<bool> in_train(classes, false);
  for (const std::uint32_t i : split.train) in_train[labels[i]] = true;
  for (std::size_t c = 0; c < classes; ++c) {
    bool present = false;
    for (const std::int32_t y : labels) {
      if (static_cast<std::size_t>(y) == c) {
        present = true;
        break;
      }
    }
    if (present && !in_train[c]) {
      throw InputError("class " + std::to_string(c) + " absent from the probe train split");
    }
  }

  std::vector<double> weights(classes * d, 0.0);
  std::vector<double> bias(classes, 0.0);
  std::vector<double> grad_w(classes * d);
  std::vector<double> grad_b(classes);
  std::vector<double> dropped(d);
  std::vector<double> logits(classes);

  Rng rng = make_rng(derive_seed(cfg.seed, 0x70726f62));
  std::vector<std::uint32_t> order = split.train;
  const double keep_scale = 1.0 / (1.0 - cfg.dropout);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(std::span<std::uint32_t>(order), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      for (std::size_t s = begin; s < end; ++s) {
        const std::uint32_t idx = order[s];
        const std::span<const double> x = features.row(idx);
        // inverted input dropout: inference uses raw features
        for (std::size_t j = 0; j < d; ++j) {
          const bool keep = cfg.dropout == 0.0 || uniform_unit(rng) >= cfg.dropout;
          dropped[j] = keep ? x[j] * keep_scale : 0.0;
        }
        double max_logit = -HUGE_VAL;
        for (std::size_t c = 0; c < classes; ++c) {
          double z = bias[c];
          const double* w = weights.data() + c * d;
          for (std::size_t j = 0; j < d; ++j) z += w[j] * dropped[j];
          logits[c] = z;
          max_logit = std::max(max_logit, z);
        }
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
          logits[c] = std::exp(logits[c] - max_logit);
          denom += logits[c];
        }
        const std::int32_t y = labels[idx];
        for (std::size_t c = 0; c < classes; ++c) {
          const double coef = logits[c] / denom - (static_cast<std::int32_t>(c) == y ? 1.0 : 0.0);
          grad_b[c] += coef;
          double* gw = grad_w.data() + c * d;
          for (std::size_t j = 0; j < d; ++j) gw[j] += coef * dropped[j];
        }
      }
      const double step = cfg.learning_rate / static_cast<double>(end - begin);
      for (std::size_t i = 0; i < weights.size(); ++i) weights[i] -= step * grad_w[i];
      for (std::size_t c = 0; c < classes; ++c) bias[c] -= step * grad_b[c];
    }
  }

  std::size_t correct = 0;
  for (const std::uint32_t idx : split.test) {
    const std::span<const double> x = features.row(idx);
    std::size_t best = 0;
    double best_z = -HUGE_VAL;
    for (std::size_t c = 0; c < classes; ++c) {
      double z = bias[c];
      const double* w = weights.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
      if (z > best_z) {
        best_z = z;
        best = c;
      }
    }
    if (static_cast<std::int32_t>(best) == labels[idx]) ++correct;
  }

  ClassifyResult result;
  result.accuracy = static_cast<double>(correct) / static_cast<double>(split.test.size());
  result.train_count = split.train.size();
  result.test_count = split.test.size();
  result.class_count = classes;
  return result;
}

void PowerTask::validate() const {
  if (head_pool.empty() || tail_pool.empty()) throw InputError("power task pools must be non-empty");
  if (sample_count < 1000) throw InputError("bootstrap sample count must be >= 1000");
  if (percentile <= 0 || percentile > 100) throw InputError("percentile must be in (0, 100]");
  if (observed.empty()) throw InputError("power task has no observed pairs");
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

PowerResult bootstrap_power(const FeatureMatrix& features, const PowerTask& task, Rng& rng) {
  task.validate();

  auto check_nonzero = [&](std::uint32_t row) {
    for (const double v : features.row(row)) {
      if (v != 0.0) return;
    }
    throw InputError("zero embedding vector for row " + std::to_string(row) + " in task '" +
                     task.name + "'");
  };
  for (const std::uint32_t r : task.head_pool) check_nonzero(r);
  for (const std::uint32_t r : task.tail_pool) check_nonzero(r);
  for (const auto& [a, b] : task.observed) {
    check_nonzero(a);
    check_nonzero(b);
  }

  std::vector<double> null_sims(task.sample_count);
  for (std::size_t i = 0; i < task.sample_count; ++i) {
    const std::uint32_t x = task.head_pool[uniform_below(rng, task.head_pool.size())];
    const std::uint32_t y = task.tail_pool[uniform_below(rng, task.tail_pool.size())];
    null_sims[i] = cosine_similarity(features.row(x), features.row(y));
  }
  std::sort(null_sims.begin(), null_sims.end());
  // nearest-rank percentile on the sorted sample
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(task.percentile / 100.0 * static_cast<double>(task.sample_count)));
  const double threshold = null_sims[std::clamp<std::size_t>(rank, 1, task.sample_count) - 1];

  std::size_t above = 0;
  for (const auto& [a, b] : task.observed) {
    if (cosine_similarity(features.row(a), features.row(b)) > threshold) ++above;
  }
  return {static_cast<double>(above) / static_cast<double>(task.observed.size()), threshold};
}

ProbeDataset build_probe_dataset(std::span<const EmbeddingSet> models,
                                 std::span<const LabelRow> labels) {
  if (models.empty()) throw InputError("probe needs at least one embedding set");

  std::unordered_map<std::string, const LabelRow*> label_of;
  for (const LabelRow& row : labels) label_of.emplace(row.entity, &row);

  // entities present in every model, in the first model's order
  std::vector<std::unordered_map<std::string, std::uint32_t>> row_of(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::uint32_t i = 0; i < models[m].entities.size(); ++i) {
      row_of[m].emplace(models[m].entities[i], i);
    }
  }

  ProbeDataset out;
  std::map<std::string, std::int32_t> type_ids, group_ids;
  std::vector<std::vector<std::uint32_t>> picked(models.size());
  for (std::uint32_t i = 0; i < models[0].entities.size(); ++i) {
    const std::string& name = models[0].entities[i];
    bool everywhere = true;
    std::vector<std::uint32_t> rows(models.size());
    rows[0] = i;
    for (std::size_t m = 1; m < models.size(); ++m) {
      auto it = row_of[m].find(name);
      if (it == row_of[m].end()) {
        everywhere = false;
        break;
      }
      rows[m] = it->second;
    }
    if (!everywhere) continue;
    auto lit = label_of.find(name);
    if (lit == label_of.end()) {
      ++out.unlabeled_dropped;
      continue;
    }
    const LabelRow& row = *lit->second;
    auto [tit, t_fresh] = type_ids.try_emplace(row.type, static_cast<std::int32_t>(type_ids.size()));
    auto [git, g_fresh] =
        group_ids.try_emplace(row.group, static_cast<std::int32_t>(group_ids.size()));
    out.entities.push_back(name);
    out.type_ids.push_back(tit->second);
    out.group_ids.push_back(git->second);
    for (std::size_t m = 0; m < models.size(); ++m) picked[m].push_back(rows[m]);
  }
  if (out.entities.empty()) throw InputError("no common labeled entities across embedding sets");

  out.type_names.resize(type_ids.size());
  for (const auto& [name, id] : type_ids) out.type_names[id] = name;
  out.group_names.resize(group_ids.size());
  for (const auto& [name, id] : group_ids) out.group_names[id] = name;

  for (std::size_t m = 0; m < models.size(); ++m) {
    FeatureMatrix mat;
    mat.rows = out.entities.size();
    mat.cols = models[m].features.cols;
    mat.data.resize(mat.rows * mat.cols);
    for (std::size_t i = 0; i < picked[m].size(); ++i) {
      const auto src = models[m].features.row(picked[m][i]);
      std::copy(src.begin(), src.end(), mat.row(i).begin());
    }
    out.per_model.push_back(std::move(mat));
  }
  return out;
}

std::vector<PowerTaskRow> read_power_tasks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::vector<PowerTaskRow> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t pos = line.find('\t', start);
      if (pos == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    if (fields.size() != 5) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 5 fields, got " +
                       std::to_string(fields.size()));
    }
    out.push_back({fields[0], fields[1], fields[2], fields[3], fields[4]});
  }
  return out;
}

std::vector<PowerTask> build_power_tasks(std::span<const PowerTaskRow> rows,
                                         const EmbeddingSet& model,
                                         std::span<const LabelRow> labels,
                                         std::size_t sample_count, double percentile) {
  std::unordered_map<std::string, std::uint32_t> row_of;
  for (std::uint32_t i = 0; i < model.entities.size(); ++i) row_of.emplace(model.entities[i], i);

  // category name -> member rows; groups take precedence over types
  std::unordered_map<std::string, std::vector<std::uint32_t>> group_pool, type_pool;
  for (const LabelRow& label : labels) {
    auto it = row_of.find(label.entity);
    if (it == row_of.end()) continue;
    group_pool[label.group].push_back(it->second);
    type_pool[label.type].push_back(it->second);
  }
  auto pool_for = [&](const std::string& category) -> const std::vector<std::uint32_t>& {
    auto git = group_pool.find(category);
    if (git != group_pool.end()) return git->second;
    auto tit = type_pool.find(category);
    if (tit != type_pool.end()) return tit->second;
    throw InputError("category names no semantic group or type: '" + category + "'");
  };

  std::map<std::string, PowerTask> tasks;  // keyed by task name, deterministic order
  for (const PowerTaskRow& row : rows) {
    const std::string key = row.label + "|" + row.head_category + "|" + row.tail_category;
    auto [it, fresh] = tasks.try_emplace(key);
    PowerTask& task = it->second;
    if (fresh) {
      task.name = key;
      task.head_pool = pool_for(row.head_category);
      task.tail_pool = pool_for(row.tail_category);
      task.sample_count = sample_count;
      task.percentile = percentile;
    }
    auto hit = row_of.find(row.head);
    auto tit = row_of.find(row.tail);
    if (hit == row_of.end()) throw InputError("observed pair entity missing: '" + row.head + "'");
    if (tit == row_of.end()) throw InputError("observed pair entity missing: '" + row.tail + "'");
    task.observed.emplace_back(hit->second, tit->second);
  }

  std::vector<PowerTask> out;
  out.reserve(tasks.size());
  for (auto& [key, task] : tasks) out.push_back(std::move(task));
  return out;
}

}  // namespace kge
