#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "kge/core.hpp"
#include "kge/models.hpp"

namespace kge {

/// Union containment over train + valid + test + transitive-closure triples,
/// used to remove known-true competitors from candidate pools.
class FilterSet {
 public:
  void add(const TripleStore& store);
  void add(const Triple& t) { set_.insert(t); }
  bool contains(const Triple& t) const { return set_.count(t) != 0; }
  std::size_t size() const { return set_.size(); }

 private:
  std::unordered_set<Triple, TripleHash> set_;
};

struct QueryRecord {
  Triple triple;
  QuerySlot slot = QuerySlot::tail;
  std::uint32_t rank = 0;       // 1-based, pessimistic ties
  std::uint32_t pool_size = 0;  // candidates surviving the filter, incl. the truth
};

struct MetricSummary {
  double mr = 0.0;
  double mrr = 0.0;
  double mq100 = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  std::size_t query_count = 0;
};

struct RankingOutcome {
  std::vector<QueryRecord> records;

  /// Aggregates over all query records. Verifies the metric identities
  /// (H@1 <= H@3 <= H@10, H@1 <= MRR, all in [0,1]) and raises NumericError
  /// if they are violated.
  MetricSummary summary() const;
};

MetricSummary summarize(std::span<const QueryRecord> records);

/// Mean-quantile contribution with a cut-off at rank 100:
/// 0 beyond rank 100, else (pool - rank) / (pool - 1). pool must be >= 2.
double mq100(std::uint32_t rank, std::uint32_t pool_size);

struct RankResult {
  std::uint32_t rank = 0;
  std::uint32_t pool_size = 0;
};

/// Filtered rank of the true candidate for one query. Candidates completing
/// a filter triple are removed (the truth itself is always exempt);
/// rank = 1 + #survivors scoring strictly higher + #exact ties.
RankResult rank_query(const EmbeddingTable& table, const ModelConfig& cfg, const Triple& truth,
                      QuerySlot slot, const FilterSet& filter);

enum class LinkTarget { head, tail, both };

/// Filtered link prediction over every triple of `queries`. `both` emits a
/// head and a tail record per triple. Deterministic regardless of `workers`.
RankingOutcome link_prediction(const TripleStore& queries, const EmbeddingTable& table,
                               const ModelConfig& cfg, const FilterSet& filter, LinkTarget target,
                               std::size_t workers = 1);

/// Ranks all relation types for each (h, ?, t) query.
RankingOutcome relation_prediction(const TripleStore& queries, const EmbeddingTable& table,
                                   const ModelConfig& cfg, const FilterSet& filter,
                                   std::size_t workers = 1);

/// Cardinality / homogeneity grouping of a relation type. Cardinality is 1
/// when the head (resp. tail) entities span exactly one semantic group;
/// homogeneous when the induced head-group -> tail-group relation is an
/// injective function.
struct RelationCategory {
  bool head_many = false;
  bool tail_many = false;
  bool homogeneous = false;

  std::string label() const;  // "1-1", "1-M", "M-1", "M-M", "1-1-hom", "M-M-hom"
};

RelationCategory categorize_relation(RelationId rel, std::span<const TripleStore* const> stores,
                                     const SemanticLabels& labels,
                                     const Vocabulary* vocab = nullptr);

struct StratumMetrics {
  std::string name;
  MetricSummary metrics;
};

/// Per-category aggregates (categories indexed by relation id), plus one row
/// per explicitly named relation. Category rows partition the records.
std::vector<StratumMetrics> stratified_metrics(const RankingOutcome& outcome,
                                               std::span<const RelationCategory> category_of_rel,
                                               std::span<const RelationId> named_relations,
                                               const Vocabulary* vocab = nullptr);

}  // namespace kge
