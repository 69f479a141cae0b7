#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kge/core.hpp"

namespace kge {

enum class ModelKind : std::uint32_t {
  transe = 0,
  distmult = 1,
  complex = 2,
  simple = 3,
  rotate = 4,
};

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> model_kind_from(std::string_view name);
std::vector<std::string_view> model_kind_names();

struct ModelConfig {
  ModelKind kind = ModelKind::transe;
  /// Real parameters per entity, uniform across models; complex models use
  /// dim/2 complex coordinates, SimplE splits dim into head and tail roles.
  std::size_t dim = 512;
  /// Margin gamma, used by the translational scores (transe, rotate).
  double margin = 6.0;
  /// Norm order for transe, 1 or 2.
  int norm_order = 1;
  /// Self-adversarial temperature alpha; 0 = uniform negative weights.
  double adversarial_temperature = 0.0;
  /// L2 coefficient applied to touched parameters during training.
  double l2_lambda = 0.0;

  std::size_t entity_dim() const { return dim; }
  std::size_t relation_dim() const;

  /// Enforces dim parity per model, margin and norm constraints.
  void validate() const;
};

/// Flat per-entity and per-relation parameter rows. RotatE relation rows are
/// phases in [-pi, pi), so the derived rotation coefficients have modulus 1
/// by construction.
struct EmbeddingTable {
  std::size_t num_entities = 0;
  std::size_t num_relations = 0;
  std::size_t entity_dim = 0;
  std::size_t relation_dim = 0;
  std::vector<double> entities;   // num_entities x entity_dim, row-major
  std::vector<double> relations;  // num_relations x relation_dim, row-major

  std::span<double> entity(EntityId id) {
    return {entities.data() + std::size_t(id) * entity_dim, entity_dim};
  }
  std::span<const double> entity(EntityId id) const {
    return {entities.data() + std::size_t(id) * entity_dim, entity_dim};
  }
  std::span<double> relation(RelationId id) {
    return {relations.data() + std::size_t(id) * relation_dim, relation_dim};
  }
  std::span<const double> relation(RelationId id) const {
    return {relations.data() + std::size_t(id) * relation_dim, relation_dim};
  }
};

/// Uniform init in [-6/sqrt(dim), +6/sqrt(dim)]; RotatE phases uniform in
/// [-pi, pi). Deterministic per seed.
EmbeddingTable init_table(const ModelConfig& cfg, std::size_t num_entities,
                          std::size_t num_relations, std::uint64_t seed);

// Span-level scoring kernels. `h` and `t` are full entity rows, `r` a full
// relation row; layouts per ModelConfig. The batched path calls these same
// kernels, so batched and single-triple scores are bitwise identical.
double score_transe(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t, double margin, int norm_order);
double score_distmult(std::span<const double> h, std::span<const double> r,
                      std::span<const double> t);
double score_complex(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t);
double score_simple(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t);
double score_rotate(std::span<const double> h, std::span<const double> phases,
                    std::span<const double> t, double margin);

double score(const ModelConfig& cfg, std::span<const double> h, std::span<const double> r,
             std::span<const double> t);
double score(const EmbeddingTable& table, const ModelConfig& cfg, const Triple& triple);

/// d(score)/d(parameter) for the three rows of one triple. When a triple
/// repeats an entity (head == tail), the caller accumulates both parts.
struct TripleGradient {
  std::vector<double> head;
  std::vector<double> rel;
  std::vector<double> tail;
};

/// Analytic partial derivatives of the score. Subgradients at L1 kinks and
/// at zero-modulus complex differences are 0.
void score_gradients(const ModelConfig& cfg, std::span<const double> h, std::span<const double> r,
                     std::span<const double> t, TripleGradient& out);

enum class QuerySlot { head, tail, relation };

/// Scores every candidate for the open slot (entities for head/tail queries,
/// relations for relation queries), in vocabulary order.
void score_candidates(const EmbeddingTable& table, const ModelConfig& cfg, const Triple& query,
                      QuerySlot slot, std::vector<double>& out);

}  // namespace kge
