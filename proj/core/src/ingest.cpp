#include "kge/ingest.hpp"

#include <algorithm>
#include <fstream>

namespace kge {

namespace {

void rstrip(std::string& line) {
  while (!line.empty() &&
         (line.back() == '\r' || line.back() == '\n' || line.back() == ' ' || line.back() == '\t'))
    line.pop_back();
}

std::vector<std::string_view> split_pipes(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('|', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  // a trailing pipe produces one empty trailing field; drop it
  if (!fields.empty() && fields.back().empty()) fields.pop_back();
  return fields;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path.string());
  return in;
}

void require_fields(const std::filesystem::path& path, std::size_t line_no,
                    const std::vector<std::string_view>& fields, std::size_t max_index) {
  if (fields.size() <= max_index) {
    throw InputError(path.string() + ":" + std::to_string(line_no) + ": row has " +
                     std::to_string(fields.size()) + " fields, need at least " +
                     std::to_string(max_index + 1));
  }
}

}  // namespace

const std::set<std::string>& RrfConfig::effective_groups() const {
  if (!allowed_groups.empty()) return allowed_groups;
  static const std::set<std::string> defaults(SemanticLabels::default_groups().begin(),
                                              SemanticLabels::default_groups().end());
  return defaults;
}

TypeGroupMap load_semantic_groups(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  TypeGroupMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    rstrip(line);
    if (line.empty()) continue;
    const auto fields = split_pipes(line);
    if (fields.size() < 4) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected GROUP|Name|TUI|Type");
    }
    const std::string group(fields[0]);
    map[std::string(fields[2])] = group;  // TUI
    map[std::string(fields[3])] = group;  // type name
  }
  return map;
}

std::unordered_set<std::string> parse_concepts(const std::filesystem::path& path,
                                               const RrfConfig& cfg) {
  std::ifstream in = open_input(path);
  const RrfColumns& c = cfg.columns;
  const std::size_t max_index = std::max({c.concept_id, c.concept_source, c.concept_suppress});
  std::unordered_set<std::string> concepts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    rstrip(line);
    if (line.empty()) continue;
    const auto fields = split_pipes(line);
    require_fields(path, line_no, fields, max_index);
    if (!cfg.source_filter.empty() && fields[c.concept_source] != cfg.source_filter) continue;
    if (cfg.suppressed_flags.count(std::string(fields[c.concept_suppress]))) continue;
    concepts.emplace(fields[c.concept_id]);
  }
  return concepts;
}

std::vector<RawTriple> parse_relations(const std::filesystem::path& path, const RrfConfig& cfg,
                                       const std::unordered_set<std::string>& concepts) {
  std::ifstream in = open_input(path);
  const RrfColumns& c = cfg.columns;
  const std::size_t max_index =
      std::max({c.rel_id1, c.rel_label, c.rel_id2, c.rel_attribute, c.rel_source, c.rel_suppress});
  std::vector<RawTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    rstrip(line);
    if (line.empty()) continue;
    const auto fields = split_pipes(line);
    require_fields(path, line_no, fields, max_index);
    if (!cfg.source_filter.empty() && fields[c.rel_source] != cfg.source_filter) continue;
    if (cfg.suppressed_flags.count(std::string(fields[c.rel_suppress]))) continue;
    const std::string_view id1 = fields[c.rel_id1];
    const std::string_view id2 = fields[c.rel_id2];
    if (!concepts.count(std::string(id1)) || !concepts.count(std::string(id2))) continue;
    std::string_view label = fields[c.rel_attribute];
    if (label.empty()) label = fields[c.rel_label];
    if (label.empty()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": empty relation label");
    }
    // the generic relation field relates the second concept to the first
    if (cfg.flip_direction) {
      out.push_back({std::string(id1), std::string(label), std::string(id2)});
    } else {
      out.push_back({std::string(id2), std::string(label), std::string(id1)});
    }
  }
  return out;
}

SemanticsResult parse_semantics(const std::filesystem::path& path, const RrfConfig& cfg,
                                const TypeGroupMap& group_map,
                                std::unordered_set<std::string>& concepts) {
  std::ifstream in = open_input(path);
  const RrfColumns& c = cfg.columns;
  const std::size_t max_index = std::max(c.sty_id, c.sty_type);
  const std::set<std::string>& allowed = cfg.effective_groups();

  SemanticsResult result;
  std::unordered_set<std::string> labeled;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    rstrip(line);
    if (line.empty()) continue;
    const auto fields = split_pipes(line);
    require_fields(path, line_no, fields, max_index);
    const std::string cui(fields[c.sty_id]);
    if (!concepts.count(cui)) continue;
    const std::string type(fields[c.sty_type]);
    if (labeled.count(cui)) {
      ++result.multi_typed;  // first retained row stays authoritative
      continue;
    }
    if (cfg.excluded_types.count(type)) continue;
    auto group_it = group_map.find(type);
    if (group_it == group_map.end()) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": semantic type not in group table: '" + type + "'");
    }
    if (!allowed.count(group_it->second)) continue;
    labeled.insert(cui);
    result.labels.push_back({cui, type, group_it->second});
  }

  // concepts with no retained type row (excluded or never typed) leave the set
  result.dropped = concepts.size() - labeled.size();
  concepts = std::move(labeled);
  return result;
}

ClosureLoadResult load_closure(const std::filesystem::path& path, const Vocabulary& vocab) {
  ClosureLoadResult result;
  for (const RawTriple& raw : read_triple_tsv(path)) {
    const auto h = vocab.entity_id(raw.head);
    const auto r = vocab.relation_id(raw.rel);
    const auto t = vocab.entity_id(raw.tail);
    if (!h || !r || !t) {
      ++result.skipped_unknown;
      continue;
    }
    result.store.insert(Triple{*h, *r, *t}, Split::closure);
  }
  return result;
}

}  // namespace kge
