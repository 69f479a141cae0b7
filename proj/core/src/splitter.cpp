#include "kge/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "kge/rng.hpp"
#include "kge/tsv.hpp"

namespace kge {

void ReciprocalMap::add(RelationId a, RelationId b) {
  auto check = [&](RelationId x, RelationId y) {
    auto it = map_.find(x);
    if (it != map_.end() && it->second != y) {
      throw InputError("relation " + std::to_string(x) + " paired with both " +
                       std::to_string(it->second) + " and " + std::to_string(y));
    }
  };
  check(a, b);
  check(b, a);
  map_[a] = b;
  map_[b] = a;
}

ReciprocalMap ReciprocalMap::from_names(
    std::span<const std::pair<std::string, std::string>> pairs, const Vocabulary& vocab,
    std::size_t* skipped) {
  ReciprocalMap map;
  std::size_t missing = 0;
  for (const auto& [a, b] : pairs) {
    const auto ra = vocab.relation_id(a);
    const auto rb = vocab.relation_id(b);
    if (!ra || !rb) {
      ++missing;
      continue;
    }
    map.add(*ra, *rb);
  }
  if (skipped) *skipped = missing;
  return map;
}

std::optional<RelationId> ReciprocalMap::partner(RelationId r) const {
  auto it = map_.find(r);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::string, std::string>> read_reciprocal_pairs(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 2 fields");
    }
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

void SplitSpec::validate() const {
  if (train_fraction <= 0 || valid_fraction <= 0 || test_fraction <= 0) {
    throw InputError("split fractions must be positive");
  }
  const double sum = train_fraction + valid_fraction + test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InputError("split fractions must sum to 1, got " + std::to_string(sum));
  }
}

std::vector<TripleGroup> pair_reciprocals(const TripleStore& store, const ReciprocalMap& map) {
  const std::vector<Triple>& triples = store.triples();
  std::unordered_map<Triple, std::uint32_t, TripleHash> position;
  position.reserve(triples.size());
  for (std::uint32_t i = 0; i < triples.size(); ++i) position.emplace(triples[i], i);

  std::vector<bool> claimed(triples.size(), false);
  std::vector<TripleGroup> groups;
  groups.reserve(triples.size());
  for (std::uint32_t i = 0; i < triples.size(); ++i) {
    if (claimed[i]) continue;
    claimed[i] = true;
    TripleGroup group{i, -1};
    const Triple& t = triples[i];
    if (const auto partner_rel = map.partner(t.rel)) {
      const Triple reciprocal{t.tail, *partner_rel, t.head};
      auto it = position.find(reciprocal);
      if (it != position.end() && !claimed[it->second]) {
        claimed[it->second] = true;
        group.second = it->second;
      }
    }
    groups.push_back(group);
  }
  return groups;
}

SplitResult split(const TripleStore& store, std::span<const TripleGroup> groups,
                  const SplitSpec& spec) {
  spec.validate();
  const std::vector<Triple>& triples = store.triples();

  std::vector<std::uint32_t> order(groups.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = make_rng(spec.seed);
  shuffle(std::span<std::uint32_t>(order), rng);

  const double fractions[3] = {spec.train_fraction, spec.valid_fraction, spec.test_fraction};
  double assigned[3] = {0, 0, 0};
  const double total = static_cast<double>(triples.size());

  // 0 = train, 1 = valid, 2 = test; member triple indices per split
  std::vector<std::uint32_t> members[3];
  for (const std::uint32_t gi : order) {
    const TripleGroup& g = groups[gi];
    int best = 0;
    double best_deficit = fractions[0] * total - assigned[0];
    for (int s = 1; s < 3; ++s) {
      const double deficit = fractions[s] * total - assigned[s];
      if (deficit > best_deficit) {
        best = s;
        best_deficit = deficit;
      }
    }
    members[best].push_back(g.first);
    if (g.second >= 0) members[best].push_back(static_cast<std::uint32_t>(g.second));
    assigned[best] += static_cast<double>(g.size());
  }

  SplitResult result;
  TripleStore* stores[3] = {&result.train, &result.valid, &result.test};
  const Split tags[3] = {Split::train, Split::valid, Split::test};
  for (int s = 0; s < 3; ++s) {
    std::sort(members[s].begin(), members[s].end());  // keep source order within each split
    for (const std::uint32_t idx : members[s]) stores[s]->insert(triples[idx], tags[s]);
  }
  return result;
}

namespace {

struct Coverage {
  std::vector<bool> entities;
  std::vector<bool> relations;

  void grow(std::size_t entity_bound, std::size_t relation_bound) {
    if (entities.size() < entity_bound) entities.resize(entity_bound, false);
    if (relations.size() < relation_bound) relations.resize(relation_bound, false);
  }

  void add(const Triple& t) {
    grow(std::max(std::size_t(t.head), std::size_t(t.tail)) + 1, std::size_t(t.rel) + 1);
    entities[t.head] = true;
    entities[t.tail] = true;
    relations[t.rel] = true;
  }

  bool covers(const Triple& t) const {
    return t.head < entities.size() && entities[t.head] && t.tail < entities.size() &&
           entities[t.tail] && t.rel < relations.size() && relations[t.rel];
  }
};

}  // namespace

RepairStats repair_unseen(TripleStore& train, TripleStore& valid, TripleStore& test,
                          const ReciprocalMap* reciprocals) {
  Coverage cover;
  for (const Triple& t : train.triples()) cover.add(t);

  RepairStats stats;
  auto repair_pass = [&](TripleStore& from, Split tag, std::size_t& moved_count) {
    bool moved_any = false;
    TripleStore kept;
    const std::vector<Triple>& triples = from.triples();
    std::vector<bool> moved(triples.size(), false);
    std::unordered_map<Triple, std::uint32_t, TripleHash> position;
    if (reciprocals && !reciprocals->empty()) {
      position.reserve(triples.size());
      for (std::uint32_t i = 0; i < triples.size(); ++i) position.emplace(triples[i], i);
    }
    auto move_to_train = [&](std::uint32_t idx) {
      moved[idx] = true;
      train.insert(triples[idx], Split::train);
      cover.add(triples[idx]);
      ++moved_count;
      moved_any = true;
    };
    for (std::uint32_t i = 0; i < triples.size(); ++i) {
      if (moved[i] || cover.covers(triples[i])) continue;
      move_to_train(i);
      // keep reciprocal pairs together so no pair straddles train and this split
      if (reciprocals) {
        if (const auto partner_rel = reciprocals->partner(triples[i].rel)) {
          const Triple reciprocal{triples[i].tail, *partner_rel, triples[i].head};
          auto it = position.find(reciprocal);
          if (it != position.end() && !moved[it->second]) move_to_train(it->second);
        }
      }
    }
    for (std::uint32_t i = 0; i < triples.size(); ++i) {
      if (!moved[i]) kept.insert(triples[i], tag);
    }
    from = std::move(kept);
    return moved_any;
  };

  bool moved = true;
  while (moved) {
    ++stats.passes;
    const bool moved_valid = repair_pass(valid, Split::valid, stats.moved_from_valid);
    const bool moved_test = repair_pass(test, Split::test, stats.moved_from_test);
    moved = moved_valid || moved_test;
  }
  return stats;
}

UnseenCounts count_unseen(const TripleStore& base, const TripleStore& probe) {
  Coverage cover;
  for (const Triple& t : base.triples()) cover.add(t);
  std::unordered_set<EntityId> unseen_entities;
  std::unordered_set<RelationId> unseen_relations;
  for (const Triple& t : probe.triples()) {
    if (t.head >= cover.entities.size() || !cover.entities[t.head]) unseen_entities.insert(t.head);
    if (t.tail >= cover.entities.size() || !cover.entities[t.tail]) unseen_entities.insert(t.tail);
    if (t.rel >= cover.relations.size() || !cover.relations[t.rel]) unseen_relations.insert(t.rel);
  }
  return {unseen_entities.size(), unseen_relations.size()};
}

}  // namespace kge
