#include "kge/models.hpp"

#include <cassert>
#include <cmath>
#include <numbers>

#include "kge/rng.hpp"

namespace kge {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::transe:
      return "transe";
    case ModelKind::distmult:
      return "distmult";
    case ModelKind::complex:
      return "complex";
    case ModelKind::simple:
      return "simple";
    case ModelKind::rotate:
      return "rotate";
  }
  return "?";
}

std::optional<ModelKind> model_kind_from(std::string_view name) {
  for (const ModelKind kind : {ModelKind::transe, ModelKind::distmult, ModelKind::complex,
                               ModelKind::simple, ModelKind::rotate}) {
    if (name == to_string(kind)) return kind;
  }
  return std::nullopt;
}

std::vector<std::string_view> model_kind_names() {
  return {"transe", "distmult", "complex", "simple", "rotate"};
}

std::size_t ModelConfig::relation_dim() const {
  switch (kind) {
    case ModelKind::transe:
    case ModelKind::distmult:
    case ModelKind::complex:
    case ModelKind::simple:
      return dim;
    case ModelKind::rotate:
      return dim / 2;  // phases only
  }
  return dim;
}

void ModelConfig::validate() const {
  if (dim == 0) throw InputError("dim must be positive");
  const bool needs_even =
      kind == ModelKind::complex || kind == ModelKind::rotate || kind == ModelKind::simple;
  if (needs_even && dim % 2 != 0) {
    throw InputError(std::string("dim must be even for ") + std::string(to_string(kind)) +
                     ", got " + std::to_string(dim));
  }
  if ((kind == ModelKind::transe || kind == ModelKind::rotate) && margin <= 0) {
    throw InputError("margin must be positive for translational models");
  }
  if (kind == ModelKind::transe && norm_order != 1 && norm_order != 2) {
    throw InputError("norm order must be 1 or 2");
  }
  if (adversarial_temperature < 0) throw InputError("adversarial temperature must be >= 0");
  if (l2_lambda < 0) throw InputError("l2 coefficient must be >= 0");
}

EmbeddingTable init_table(const ModelConfig& cfg, std::size_t num_entities,
                          std::size_t num_relations, std::uint64_t seed) {
  cfg.validate();
  if (num_entities == 0 || num_relations == 0) {
    throw InputError("entity and relation counts must be positive");
  }
  EmbeddingTable table;
  table.num_entities = num_entities;
  table.num_relations = num_relations;
  table.entity_dim = cfg.entity_dim();
  table.relation_dim = cfg.relation_dim();
  table.entities.resize(num_entities * table.entity_dim);
  table.relations.resize(num_relations * table.relation_dim);

  const double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  Rng rng = make_rng(seed);
  for (double& v : table.entities) v = uniform_range(rng, -bound, bound);
  if (cfg.kind == ModelKind::rotate) {
    for (double& v : table.relations) v = uniform_range(rng, -std::numbers::pi, std::numbers::pi);
  } else {
    for (double& v : table.relations) v = uniform_range(rng, -bound, bound);
  }
  return table;
}

double score_transe(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t, double margin, int norm_order) {
  const std::size_t d = h.size();
  double acc = 0.0;
  if (norm_order == 1) {
    for (std::size_t i = 0; i < d; ++i) acc += std::abs((h[i] + r[i]) - t[i]);
    return margin - acc;
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = (h[i] + r[i]) - t[i];
    acc += diff * diff;
  }
  return margin - std::sqrt(acc);
}

// Term order (h*t)*r keeps score(h,r,t) == score(t,r,h) bitwise exact.
double score_distmult(std::span<const double> h, std::span<const double> r,
                      std::span<const double> t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) acc += (h[i] * t[i]) * r[i];
  return acc;
}

double score_complex(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t) {
  // interleaved (re, im); Re(sum h * r * conj(t))
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < h.size(); i += 2) {
    const double hr_re = h[i] * r[i] - h[i + 1] * r[i + 1];
    const double hr_im = h[i] * r[i + 1] + h[i + 1] * r[i];
    acc += hr_re * t[i] + hr_im * t[i + 1];
  }
  return acc;
}

double score_simple(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t) {
  // entity rows: [head-role | tail-role]; relation rows: [forward | inverse].
  // The two sums are kept separate and added once so swapping the roles of
  // h and t (with the relation halves swapped) is bitwise exact.
  const std::size_t half = h.size() / 2;
  const double* head_role_h = h.data();
  const double* tail_role_h = h.data() + half;
  const double* head_role_t = t.data();
  const double* tail_role_t = t.data() + half;
  const double* fwd = r.data();
  const double* inv = r.data() + half;
  double forward_sum = 0.0;
  double inverse_sum = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    forward_sum += (head_role_h[i] * tail_role_t[i]) * fwd[i];
    inverse_sum += (head_role_t[i] * tail_role_h[i]) * inv[i];
  }
  return 0.5 * (forward_sum + inverse_sum);
}

double score_rotate(std::span<const double> h, std::span<const double> phases,
                    std::span<const double> t, double margin) {
  double acc = 0.0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double c = std::cos(phases[i]);
    const double s = std::sin(phases[i]);
    const double rot_re = h[2 * i] * c - h[2 * i + 1] * s;
    const double rot_im = h[2 * i] * s + h[2 * i + 1] * c;
    const double diff_re = rot_re - t[2 * i];
    const double diff_im = rot_im - t[2 * i + 1];
    acc += std::sqrt(diff_re * diff_re + diff_im * diff_im);
  }
  return margin - acc;
}

double score(const ModelConfig& cfg, std::span<const double> h, std::span<const double> r,
             std::span<const double> t) {
  switch (cfg.kind) {
    case ModelKind::transe:
      return score_transe(h, r, t, cfg.margin, cfg.norm_order);
    case ModelKind::distmult:
      return score_distmult(h, r, t);
    case ModelKind::complex:
      return score_complex(h, r, t);
    case ModelKind::simple:
      return score_simple(h, r, t);
    case ModelKind::rotate:
      return score_rotate(h, r, t, cfg.margin);
  }
  return 0.0;
}

double score(const EmbeddingTable& table, const ModelConfig& cfg, const Triple& triple) {
  return score(cfg, table.entity(triple.head), table.relation(triple.rel),
               table.entity(triple.tail));
}

namespace {

inline double sign_or_zero(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

void grad_transe(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                 int norm_order, TripleGradient& g) {
  const std::size_t d = h.size();
  if (norm_order == 1) {
    for (std::size_t i = 0; i < d; ++i) {
      const double s = sign_or_zero((h[i] + r[i]) - t[i]);
      g.head[i] = -s;
      g.rel[i] = -s;
      g.tail[i] = s;
    }
    return;
  }
  double norm_sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = (h[i] + r[i]) - t[i];
    norm_sq += diff * diff;
  }
  const double norm = std::sqrt(norm_sq);
  if (norm == 0.0) {
    std::fill(g.head.begin(), g.head.end(), 0.0);
    std::fill(g.rel.begin(), g.rel.end(), 0.0);
    std::fill(g.tail.begin(), g.tail.end(), 0.0);
    return;
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = (h[i] + r[i]) - t[i];
    const double v = diff / norm;
    g.head[i] = -v;
    g.rel[i] = -v;
    g.tail[i] = v;
  }
}

void grad_distmult(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                   TripleGradient& g) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    g.head[i] = r[i] * t[i];
    g.rel[i] = h[i] * t[i];
    g.tail[i] = h[i] * r[i];
  }
}

void grad_complex(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                  TripleGradient& g) {
  for (std::size_t i = 0; i + 1 < h.size(); i += 2) {
    const double a = h[i], b = h[i + 1];
    const double c = r[i], d = r[i + 1];
    const double e = t[i], f = t[i + 1];
    g.head[i] = c * e + d * f;
    g.head[i + 1] = -d * e + c * f;
    g.rel[i] = a * e + b * f;
    g.rel[i + 1] = -b * e + a * f;
    g.tail[i] = a * c - b * d;
    g.tail[i + 1] = a * d + b * c;
  }
}

void grad_simple(std::span<const double> h, std::span<const double> r, std::span<const double> t,
                 TripleGradient& g) {
  const std::size_t half = h.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double head_role_h = h[i];
    const double tail_role_h = h[half + i];
    const double head_role_t = t[i];
    const double tail_role_t = t[half + i];
    const double fwd = r[i];
    const double inv = r[half + i];
    g.head[i] = 0.5 * fwd * tail_role_t;
    g.head[half + i] = 0.5 * inv * head_role_t;
    g.rel[i] = 0.5 * head_role_h * tail_role_t;
    g.rel[half + i] = 0.5 * head_role_t * tail_role_h;
    g.tail[i] = 0.5 * inv * tail_role_h;
    g.tail[half + i] = 0.5 * fwd * head_role_h;
  }
}

void grad_rotate(std::span<const double> h, std::span<const double> phases,
                 std::span<const double> t, TripleGradient& g) {
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double c = std::cos(phases[i]);
    const double s = std::sin(phases[i]);
    const double rot_re = h[2 * i] * c - h[2 * i + 1] * s;
    const double rot_im = h[2 * i] * s + h[2 * i + 1] * c;
    const double ur = rot_re - t[2 * i];
    const double ui = rot_im - t[2 * i + 1];
    const double mod = std::sqrt(ur * ur + ui * ui);
    if (mod == 0.0) {
      g.head[2 * i] = g.head[2 * i + 1] = 0.0;
      g.tail[2 * i] = g.tail[2 * i + 1] = 0.0;
      g.rel[i] = 0.0;
      continue;
    }
    // score = margin - sum |u|; d|u|/dx = (ur dur/dx + ui dui/dx) / |u|
    g.head[2 * i] = -(ur * c + ui * s) / mod;
    g.head[2 * i + 1] = -(-ur * s + ui * c) / mod;
    g.tail[2 * i] = ur / mod;
    g.tail[2 * i + 1] = ui / mod;
    g.rel[i] = (ur * rot_im - ui * rot_re) / mod;
  }
}

}  // namespace

void score_gradients(const ModelConfig& cfg, std::span<const double> h, std::span<const double> r,
                     std::span<const double> t, TripleGradient& g) {
  g.head.resize(h.size());
  g.rel.resize(r.size());
  g.tail.resize(t.size());
  switch (cfg.kind) {
    case ModelKind::transe:
      grad_transe(h, r, t, cfg.norm_order, g);
      return;
    case ModelKind::distmult:
      grad_distmult(h, r, t, g);
      return;
    case ModelKind::complex:
      grad_complex(h, r, t, g);
      return;
    case ModelKind::simple:
      grad_simple(h, r, t, g);
      return;
    case ModelKind::rotate:
      grad_rotate(h, r, t, g);
      return;
  }
}

void score_candidates(const EmbeddingTable& table, const ModelConfig& cfg, const Triple& query,
                      QuerySlot slot, std::vector<double>& out) {
  if (slot == QuerySlot::relation) {
    out.resize(table.num_relations);
    const auto h = table.entity(query.head);
    const auto t = table.entity(query.tail);
    for (RelationId r = 0; r < table.num_relations; ++r) {
      out[r] = score(cfg, h, table.relation(r), t);
    }
    return;
  }
  out.resize(table.num_entities);
  const auto r = table.relation(query.rel);
  if (slot == QuerySlot::tail) {
    const auto h = table.entity(query.head);
    for (EntityId c = 0; c < table.num_entities; ++c) {
      out[c] = score(cfg, h, r, table.entity(c));
    }
  } else {
    const auto t = table.entity(query.tail);
    for (EntityId c = 0; c < table.num_entities; ++c) {
      out[c] = score(cfg, table.entity(c), r, t);
    }
  }
}

}  // namespace kge
