#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "kge/core.hpp"
#include "kge/models.hpp"
#include "kge/rng.hpp"

namespace kge::test {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("kge_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform_range(rng, lo, hi);
  return v;
}

/// Max relative error between analytic gradients and central finite
/// differences of the score over the concatenated (head, rel, tail)
/// parameters. The denominator floor keeps near-zero components from
/// turning the 1e-9 finite-difference noise into spurious relative error.
inline double gradient_vs_finite_difference(const ModelConfig& cfg, std::vector<double> h,
                                            std::vector<double> r, std::vector<double> t,
                                            double step = 1e-6) {
  TripleGradient grad;
  score_gradients(cfg, h, r, t, grad);

  auto eval = [&] { return score(cfg, h, r, t); };
  double worst = 0.0;
  auto check = [&](std::vector<double>& params, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + step;
      const double up = eval();
      params[i] = saved - step;
      const double down = eval();
      params[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double rel = std::abs(analytic[i] - numeric) / std::max(std::abs(numeric), 1e-3);
      worst = std::max(worst, rel);
    }
  };
  check(h, grad.head);
  check(r, grad.rel);
  check(t, grad.tail);
  return worst;
}

/// Random triple parameters resampled away from the non-differentiable sets
/// (L1 kinks, zero-modulus complex differences).
inline void sample_smooth_params(const ModelConfig& cfg, Rng& rng, std::vector<double>& h,
                                 std::vector<double>& r, std::vector<double>& t) {
  const double safe = 1e-3;
  while (true) {
    h = random_vector(cfg.entity_dim(), rng);
    r = random_vector(cfg.relation_dim(), rng);
    t = random_vector(cfg.entity_dim(), rng);
    bool ok = true;
    if (cfg.kind == ModelKind::transe) {
      for (std::size_t i = 0; i < h.size(); ++i) {
        if (std::abs((h[i] + r[i]) - t[i]) < safe) ok = false;
      }
    } else if (cfg.kind == ModelKind::rotate) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        const double c = std::cos(r[i]), s = std::sin(r[i]);
        const double ur = h[2 * i] * c - h[2 * i + 1] * s - t[2 * i];
        const double ui = h[2 * i] * s + h[2 * i + 1] * c - t[2 * i + 1];
        if (std::sqrt(ur * ur + ui * ui) < safe) ok = false;
      }
    }
    if (ok) return;
  }
}

/// Deterministic hierarchical toy KG: a two-level tree of concept entities
/// under `isa`/`inverse_isa` (one root, 10 cluster heads, leaves spread by a
/// seeded shuffle), plus three attribute relations (one with its own
/// reciprocal). Every edge is a function of a concept's (cluster, depth), so
/// any held-out edge stays inferable from the concept's remaining edges.
/// 200 entities, 6 relation types, roughly 2,000 triples.
struct ToyKg {
  std::vector<RawTriple> triples;
  std::vector<std::pair<std::string, std::string>> reciprocal_pairs = {
      {"isa", "inverse_isa"}, {"attr_a", "attr_a_of"}};
};

inline ToyKg make_hierarchical_kg(std::uint64_t seed, std::size_t concepts = 170,
                                  std::size_t attributes = 30) {
  Rng rng = make_rng(seed);
  ToyKg kg;
  auto concept_name = [](std::size_t i) { return "c" + std::to_string(i); };
  auto attribute_name = [](std::size_t i) { return "a" + std::to_string(i); };
  const std::size_t kClusters = 10;
  const std::size_t third = attributes / 3;

  // node 0 is the root, 1..10 the cluster heads, the rest leaves with a
  // shuffled cluster assignment
  std::vector<std::size_t> cluster(concepts, 0);
  std::vector<std::size_t> depth(concepts, 0);
  std::vector<std::size_t> leaf_cluster(concepts > kClusters + 1 ? concepts - kClusters - 1 : 0);
  for (std::size_t j = 0; j < leaf_cluster.size(); ++j) leaf_cluster[j] = j % kClusters;
  shuffle(std::span<std::size_t>(leaf_cluster), rng);

  for (std::size_t i = 1; i < concepts; ++i) {
    std::size_t parent;
    if (i <= kClusters) {
      parent = 0;
      cluster[i] = i - 1;
      depth[i] = 1;
    } else {
      cluster[i] = leaf_cluster[i - kClusters - 1];
      parent = 1 + cluster[i];
      depth[i] = 2;
    }
    kg.triples.push_back({concept_name(i), "isa", concept_name(parent)});
    kg.triples.push_back({concept_name(parent), "inverse_isa", concept_name(i)});
  }
  for (std::size_t i = 0; i < concepts; ++i) {
    const std::size_t c = cluster[i];
    const std::size_t d = depth[i];
    for (const std::size_t a : {c % third, (c + 5) % third}) {
      kg.triples.push_back({concept_name(i), "attr_a", attribute_name(a)});
      kg.triples.push_back({attribute_name(a), "attr_a_of", concept_name(i)});
    }
    for (const std::size_t a : {c % third, (c + 1) % third, (c + d) % third}) {
      kg.triples.push_back({concept_name(i), "attr_b", attribute_name(third + a)});
    }
    for (const std::size_t a : {(c + d) % third, (c + 3) % third, (c + 7) % third}) {
      kg.triples.push_back({concept_name(i), "attr_c", attribute_name(2 * third + a)});
    }
  }
  return kg;
}

}  // namespace kge::test
