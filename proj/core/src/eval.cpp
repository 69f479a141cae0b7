#include "kge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <thread>

namespace kge {

void FilterSet::add(const TripleStore& store) {
  for (const Triple& t : store.triples()) set_.insert(t);
}

double mq100(std::uint32_t rank, std::uint32_t pool_size) {
  if (pool_size < 2) throw InputError("mq100 needs a pool of at least 2 candidates");
  if (rank < 1 || rank > pool_size) throw InputError("rank out of range");
  if (rank > 100) return 0.0;
  return static_cast<double>(pool_size - rank) / static_cast<double>(pool_size - 1);
}

MetricSummary summarize(std::span<const QueryRecord> records) {
  if (records.empty()) throw InputError("cannot summarize an empty evaluation");
  MetricSummary s;
  s.query_count = records.size();
  for (const QueryRecord& rec : records) {
    if (rec.rank < 1 || rec.rank > rec.pool_size) {
      throw NumericError("rank " + std::to_string(rec.rank) + " outside pool " +
                         std::to_string(rec.pool_size));
    }
    s.mr += rec.rank;
    s.mrr += 1.0 / rec.rank;
    // a single-candidate pool makes the quantile degenerate; the truth is
    // necessarily at rank 1, counted as quantile 1
    s.mq100 += rec.pool_size >= 2 ? mq100(rec.rank, rec.pool_size) : 1.0;
    s.hits1 += rec.rank <= 1;
    s.hits3 += rec.rank <= 3;
    s.hits10 += rec.rank <= 10;
  }
  const double n = static_cast<double>(records.size());
  s.mr /= n;
  s.mrr /= n;
  s.mq100 /= n;
  s.hits1 /= n;
  s.hits3 /= n;
  s.hits10 /= n;

  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(s.hits1 <= s.hits3 && s.hits3 <= s.hits10) || s.hits1 > s.mrr || !in_unit(s.mrr) ||
      !in_unit(s.mq100) || !in_unit(s.hits1) || !in_unit(s.hits3) || !in_unit(s.hits10)) {
    throw NumericError("metric identities violated");
  }
  return s;
}

MetricSummary RankingOutcome::summary() const { return summarize(records); }

RankResult rank_query(const EmbeddingTable& table, const ModelConfig& cfg, const Triple& truth,
                      QuerySlot slot, const FilterSet& filter) {
  static thread_local std::vector<double> scores;
  score_candidates(table, cfg, truth, slot, scores);

  const std::uint32_t true_id = slot == QuerySlot::head       ? truth.head
                                : slot == QuerySlot::tail     ? truth.tail
                                                              : truth.rel;
  if (true_id >= scores.size()) {
    throw InputError("query id " + std::to_string(true_id) + " outside the embedding table");
  }
  const double true_score = scores[true_id];
  std::uint32_t pool = 1;
  std::uint32_t above = 0;
  for (std::uint32_t c = 0; c < scores.size(); ++c) {
    if (c == true_id) continue;
    Triple completed = truth;
    switch (slot) {
      case QuerySlot::head:
        completed.head = c;
        break;
      case QuerySlot::tail:
        completed.tail = c;
        break;
      case QuerySlot::relation:
        completed.rel = c;
        break;
    }
    if (filter.contains(completed)) continue;
    ++pool;
    if (scores[c] >= true_score) ++above;  // ties rank above (pessimistic)
  }
  return {1 + above, pool};
}

namespace {

RankingOutcome ranked_queries(const TripleStore& queries, const EmbeddingTable& table,
                              const ModelConfig& cfg, const FilterSet& filter,
                              std::span<const QuerySlot> slots, std::size_t workers) {
  const std::vector<Triple>& triples = queries.triples();
  if (triples.empty()) throw InputError("query store is empty");

  RankingOutcome outcome;
  outcome.records.resize(triples.size() * slots.size());

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t s = 0; s < slots.size(); ++s) {
        const RankResult r = rank_query(table, cfg, triples[i], slots[s], filter);
        outcome.records[i * slots.size() + s] = {triples[i], slots[s], r.rank, r.pool_size};
      }
    }
  };

  if (workers <= 1 || triples.size() < 2 * workers) {
    run_range(0, triples.size());
    return outcome;
  }
  std::vector<std::thread> pool;
  std::vector<std::string> errors(workers);
  const std::size_t chunk = (triples.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(begin + chunk, triples.size());
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        run_range(begin, end);
      } catch (const std::exception& e) {
        errors[w] = e.what();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::string& e : errors) {
    if (!e.empty()) throw InputError(e);
  }
  return outcome;
}

}  // namespace

RankingOutcome link_prediction(const TripleStore& queries, const EmbeddingTable& table,
                               const ModelConfig& cfg, const FilterSet& filter, LinkTarget target,
                               std::size_t workers) {
  switch (target) {
    case LinkTarget::head: {
      const QuerySlot slots[] = {QuerySlot::head};
      return ranked_queries(queries, table, cfg, filter, slots, workers);
    }
    case LinkTarget::tail: {
      const QuerySlot slots[] = {QuerySlot::tail};
      return ranked_queries(queries, table, cfg, filter, slots, workers);
    }
    case LinkTarget::both: {
      const QuerySlot slots[] = {QuerySlot::head, QuerySlot::tail};
      return ranked_queries(queries, table, cfg, filter, slots, workers);
    }
  }
  throw InputError("bad link target");
}

RankingOutcome relation_prediction(const TripleStore& queries, const EmbeddingTable& table,
                                   const ModelConfig& cfg, const FilterSet& filter,
                                   std::size_t workers) {
  const QuerySlot slots[] = {QuerySlot::relation};
  return ranked_queries(queries, table, cfg, filter, slots, workers);
}

std::string RelationCategory::label() const {
  std::string out;
  out += head_many ? "M" : "1";
  out += "-";
  out += tail_many ? "M" : "1";
  if (homogeneous) out += "-hom";
  return out;
}

RelationCategory categorize_relation(RelationId rel, std::span<const TripleStore* const> stores,
                                     const SemanticLabels& labels, const Vocabulary* vocab) {
  std::set<std::int32_t> head_groups;
  std::set<std::int32_t> tail_groups;
  std::set<std::pair<std::int32_t, std::int32_t>> pairs;
  std::size_t triple_count = 0;

  auto group_of = [&](EntityId e) {
    const std::int32_t g = labels.group_of(e);
    if (g < 0) {
      const std::string name = vocab ? vocab->entity_name(e) : std::to_string(e);
      throw InputError("entity without semantic label: " + name);
    }
    return g;
  };

  for (const TripleStore* store : stores) {
    if (!store) continue;
    for (const Triple& t : store->triples()) {
      if (t.rel != rel) continue;
      ++triple_count;
      const std::int32_t gh = group_of(t.head);
      const std::int32_t gt = group_of(t.tail);
      head_groups.insert(gh);
      tail_groups.insert(gt);
      pairs.insert({gh, gt});
    }
  }
  if (triple_count == 0) {
    const std::string name = vocab ? vocab->relation_name(rel) : std::to_string(rel);
    throw InputError("relation has no triples: " + name);
  }

  RelationCategory cat;
  cat.head_many = head_groups.size() > 1;
  cat.tail_many = tail_groups.size() > 1;

  // homogeneous iff head-group -> tail-group is a function and injective
  std::map<std::int32_t, std::int32_t> forward;
  std::map<std::int32_t, std::int32_t> backward;
  bool functional = true;
  for (const auto& [gh, gt] : pairs) {
    auto [fit, fresh_f] = forward.try_emplace(gh, gt);
    if (!fresh_f && fit->second != gt) functional = false;
    auto [bit, fresh_b] = backward.try_emplace(gt, gh);
    if (!fresh_b && bit->second != gh) functional = false;
  }
  cat.homogeneous = functional;
  return cat;
}

std::vector<StratumMetrics> stratified_metrics(const RankingOutcome& outcome,
                                               std::span<const RelationCategory> category_of_rel,
                                               std::span<const RelationId> named_relations,
                                               const Vocabulary* vocab) {
  std::map<std::string, std::vector<QueryRecord>> by_category;
  for (const QueryRecord& rec : outcome.records) {
    if (rec.triple.rel >= category_of_rel.size()) {
      throw InputError("record relation " + std::to_string(rec.triple.rel) +
                       " has no category");
    }
    by_category[category_of_rel[rec.triple.rel].label()].push_back(rec);
  }

  std::vector<StratumMetrics> out;
  for (const auto& [label, records] : by_category) {
    out.push_back({label, summarize(records)});
  }
  for (const RelationId rel : named_relations) {
    std::vector<QueryRecord> records;
    for (const QueryRecord& rec : outcome.records) {
      if (rec.triple.rel == rel) records.push_back(rec);
    }
    const std::string name = vocab ? vocab->relation_name(rel) : std::to_string(rel);
    if (records.empty()) {
      out.push_back({name, MetricSummary{}});
      continue;
    }
    out.push_back({name, summarize(records)});
  }
  return out;
}

}  // namespace kge
