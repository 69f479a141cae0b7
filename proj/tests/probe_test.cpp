#include <cmath>

#include "doctest.h"
#include "kge/probe.hpp"
#include "test_util.hpp"

using namespace kge;

namespace {

/// `classes` well-separated Gaussian clusters in `dim` dimensions.
struct ClusterData {
  FeatureMatrix features;
  std::vector<std::int32_t> labels;
};

ClusterData make_clusters(std::size_t points, std::size_t classes, std::size_t dim,
                          double separation, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  ClusterData data;
  data.features.rows = points;
  data.features.cols = dim;
  data.features.data.resize(points * dim);
  data.labels.resize(points);
  std::vector<std::vector<double>> centers(classes);
  for (auto& center : centers) {
    center.resize(dim);
    for (double& c : center) c = separation * gaussian(rng);
  }
  for (std::size_t i = 0; i < points; ++i) {
    const std::int32_t y = static_cast<std::int32_t>(uniform_below(rng, classes));
    data.labels[i] = y;
    auto row = data.features.row(i);
    for (std::size_t j = 0; j < dim; ++j) row[j] = centers[y][j] + gaussian(rng);
  }
  return data;
}

ProbeConfig default_probe(std::uint64_t seed) {
  ProbeConfig cfg;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("probe config validation") {
  ProbeConfig cfg;
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.dropout = 0.1;
  cfg.train_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg.train_fraction = 0.9;
  cfg.validate();
}

TEST_CASE("stratified split keeps every class in train and is reproducible") {
  std::vector<std::int32_t> labels;
  for (int i = 0; i < 200; ++i) labels.push_back(i % 4);
  labels.push_back(4);  // singleton class

  const SplitIndices a = stratified_split(labels, 0.9, 5);
  const SplitIndices b = stratified_split(labels, 0.9, 5);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.train.size() + a.test.size() == labels.size());

  bool singleton_in_train = false;
  for (const std::uint32_t i : a.train) {
    if (labels[i] == 4) singleton_in_train = true;
  }
  CHECK(singleton_in_train);

  const SplitIndices c = stratified_split(labels, 0.9, 6);
  CHECK(a.train != c.train);
}

TEST_CASE("classification separates well-separated clusters") {
  const ClusterData data = make_clusters(1000, 4, 32, 8.0, 71);
  const ClassifyResult result = classify(data.features, data.labels, default_probe(1));
  CHECK(result.accuracy >= 0.99);
  CHECK(result.class_count == 4);
  CHECK(result.train_count + result.test_count == 1000);
}

TEST_CASE("classification of shuffled labels sits at chance level") {
  ClusterData data = make_clusters(1000, 4, 32, 8.0, 72);
  Rng rng = make_rng(73);
  shuffle(std::span<std::int32_t>(data.labels), rng);
  const ClassifyResult result = classify(data.features, data.labels, default_probe(2));
  // chance is 1/4; allow 3 sigma of binomial noise around it
  const double n = static_cast<double>(result.test_count);
  const double sigma = std::sqrt(0.25 * 0.75 / n);
  CHECK(std::abs(result.accuracy - 0.25) <= 3.0 * sigma + 0.05);
}

TEST_CASE("classification is deterministic per seed") {
  const ClusterData data = make_clusters(400, 3, 16, 4.0, 74);
  const ClassifyResult a = classify(data.features, data.labels, default_probe(9));
  const ClassifyResult b = classify(data.features, data.labels, default_probe(9));
  CHECK(a.accuracy == b.accuracy);
}

TEST_CASE("cosine similarity basics") {
  const std::vector<double> x{1, 0, 0};
  const std::vector<double> y{0, 1, 0};
  CHECK(cosine_similarity(x, x) == doctest::Approx(1.0));
  CHECK(cosine_similarity(x, y) == doctest::Approx(0.0));
}

TEST_CASE("bootstrap power approaches 1 on identical-pair fixtures") {
  // observed pairs are identical unit vectors (cosine 1); pools are random
  // directions whose pairwise cosines concentrate near 0 in high dimension
  Rng rng = make_rng(75);
  const std::size_t pool_size = 200, dim = 128;
  FeatureMatrix features;
  features.rows = pool_size;
  features.cols = dim;
  features.data.resize(pool_size * dim);
  for (std::size_t i = 0; i < pool_size; ++i) {
    for (double& v : features.row(i)) v = gaussian(rng);
  }
  PowerTask task;
  task.name = "identical";
  for (std::uint32_t i = 0; i < 100; ++i) task.observed.emplace_back(i, i);
  for (std::uint32_t i = 0; i < pool_size; ++i) {
    task.head_pool.push_back(i);
    task.tail_pool.push_back(i);
  }
  const PowerResult result = bootstrap_power(features, task, rng);
  CHECK(result.power >= 0.95);
  CHECK(result.threshold < 0.9);
}

TEST_CASE("bootstrap power is calibrated at the significance level under the null") {
  // observed pairs drawn from the null itself: power must sit near 0.05
  const std::size_t pool_size = 300, dim = 16;
  std::size_t in_range = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_rng(seed + 760);
    FeatureMatrix features;
    features.rows = pool_size;
    features.cols = dim;
    features.data.resize(pool_size * dim);
    for (std::size_t i = 0; i < pool_size; ++i) {
      for (double& v : features.row(i)) v = gaussian(rng);
    }
    PowerTask task;
    task.name = "null";
    for (std::uint32_t i = 0; i < pool_size; ++i) {
      task.head_pool.push_back(i);
      task.tail_pool.push_back(i);
    }
    for (int i = 0; i < 1000; ++i) {
      task.observed.emplace_back(static_cast<std::uint32_t>(uniform_below(rng, pool_size)),
                                 static_cast<std::uint32_t>(uniform_below(rng, pool_size)));
    }
    const PowerResult result = bootstrap_power(features, task, rng);
    if (result.power >= 0.03 && result.power <= 0.07) ++in_range;
  }
  CHECK(in_range >= 18);
}

TEST_CASE("bootstrap power rejects zero vectors naming the row") {
  FeatureMatrix features;
  features.rows = 3;
  features.cols = 4;
  features.data.assign(12, 1.0);
  for (double& v : features.row(1)) v = 0.0;
  PowerTask task;
  task.name = "zeroed";
  task.observed = {{0, 2}};
  task.head_pool = {0, 1};
  task.tail_pool = {2};
  Rng rng = make_rng(77);
  CHECK_THROWS_WITH_AS(bootstrap_power(features, task, rng), doctest::Contains("1"), InputError);
}

TEST_CASE("power task validation") {
  PowerTask task;
  task.observed = {{0, 1}};
  task.head_pool = {0};
  task.tail_pool = {1};
  task.sample_count = 100;  // below the floor
  CHECK_THROWS_AS(task.validate(), InputError);
  task.sample_count = 1000;
  task.validate();
}

TEST_CASE("power is invariant under positive rescaling of all embeddings") {
  Rng rng = make_rng(78);
  const std::size_t pool_size = 100, dim = 8;
  FeatureMatrix features;
  features.rows = pool_size;
  features.cols = dim;
  features.data.resize(pool_size * dim);
  for (std::size_t i = 0; i < pool_size; ++i) {
    for (double& v : features.row(i)) v = gaussian(rng);
  }
  PowerTask task;
  task.name = "scale";
  for (std::uint32_t i = 0; i + 1 < 40; i += 2) task.observed.emplace_back(i, i + 1);
  for (std::uint32_t i = 0; i < pool_size; ++i) {
    task.head_pool.push_back(i);
    task.tail_pool.push_back(i);
  }

  Rng rng_a = make_rng(99);
  const PowerResult base = bootstrap_power(features, task, rng_a);

  for (const double scale : {2.0, 3.7}) {
    FeatureMatrix scaled = features;
    for (double& v : scaled.data) v *= scale;
    Rng rng_b = make_rng(99);  // same draw sequence
    const PowerResult rescaled = bootstrap_power(scaled, task, rng_b);
    CHECK(rescaled.power == base.power);
  }
}

TEST_CASE("probe dataset intersects models and drops unlabeled entities") {
  EmbeddingSet a;
  a.name = "model_a";
  a.entities = {"e0", "e1", "e2", "e3"};
  a.features.rows = 4;
  a.features.cols = 2;
  a.features.data = {0, 0, 1, 1, 2, 2, 3, 3};

  EmbeddingSet b;
  b.name = "model_b";
  b.entities = {"e2", "e1", "e9"};  // 50% overlap with a
  b.features.rows = 3;
  b.features.cols = 3;
  b.features.data = {20, 20, 20, 10, 10, 10, 90, 90, 90};

  const std::vector<LabelRow> labels = {
      {"e0", "Disease", "DISO"}, {"e1", "Drug", "CHEM"}, {"e2", "Disease", "DISO"}};

  const EmbeddingSet models[] = {a, b};
  const ProbeDataset dataset = build_probe_dataset(models, labels);
  REQUIRE(dataset.entities == std::vector<std::string>{"e1", "e2"});
  CHECK(dataset.per_model[0].row(0)[0] == 1);
  CHECK(dataset.per_model[1].row(0)[0] == 10);  // aligned to e1
  CHECK(dataset.per_model[1].row(1)[0] == 20);  // aligned to e2
  CHECK(dataset.group_names.size() == 2);
  CHECK(dataset.type_ids.size() == 2);

  SUBCASE("identical sets intersect to themselves") {
    const EmbeddingSet twice[] = {a, a};
    const ProbeDataset same = build_probe_dataset(twice, labels);
    CHECK(same.entities == std::vector<std::string>{"e0", "e1", "e2"});
    CHECK(same.unlabeled_dropped == 1);  // e3 has no label
  }
  SUBCASE("empty intersection is an error") {
    EmbeddingSet c;
    c.name = "model_c";
    c.entities = {"x0"};
    c.features.rows = 1;
    c.features.cols = 1;
    c.features.data = {1.0};
    const EmbeddingSet disjoint[] = {a, c};
    CHECK_THROWS_AS(build_probe_dataset(disjoint, labels), InputError);
  }
}

TEST_CASE("power tasks group rows by label and categories") {
  EmbeddingSet model;
  model.name = "m";
  model.entities = {"h1", "h2", "t1", "t2"};
  model.features.rows = 4;
  model.features.cols = 2;
  model.features.data = {1, 0, 0.9, 0.1, 0, 1, 0.1, 0.9};

  const std::vector<LabelRow> labels = {{"h1", "Drug", "CHEM"},
                                        {"h2", "Drug", "CHEM"},
                                        {"t1", "Disease", "DISO"},
                                        {"t2", "Disease", "DISO"}};
  const std::vector<PowerTaskRow> rows = {
      {"h1", "t1", "causes", "CHEM", "DISO"},
      {"h2", "t2", "causes", "CHEM", "DISO"},
      {"h1", "h2", "same_type", "Drug", "Drug"},
  };
  const auto tasks = build_power_tasks(rows, model, labels, 1000, 95.0);
  REQUIRE(tasks.size() == 2);
  CHECK(tasks[0].name == "causes|CHEM|DISO");
  CHECK(tasks[0].observed.size() == 2);
  CHECK(tasks[0].head_pool.size() == 2);
  CHECK(tasks[1].name == "same_type|Drug|Drug");  // resolved via the type pool

  const std::vector<PowerTaskRow> bad = {{"h1", "t1", "causes", "NOPE", "DISO"}};
  CHECK_THROWS_AS(build_power_tasks(bad, model, labels, 1000, 95.0), InputError);
}
