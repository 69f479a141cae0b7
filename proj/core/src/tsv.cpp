#include "kge/tsv.hpp"

#include <fstream>

namespace kge {

namespace {

void rstrip(std::string& line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
    line.pop_back();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path.string());
  return out;
}

}  // namespace

std::vector<RawTriple> read_triple_tsv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<RawTriple> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    rstrip(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    }
    out.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2])});
  }
  return out;
}

void write_triple_tsv(const std::filesystem::path& path, std::span<const RawTriple> triples) {
  std::ofstream out = open_output(path);
  for (const RawTriple& t : triples) out << t.head << '\t' << t.rel << '\t' << t.tail << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

void write_triple_tsv(const std::filesystem::path& path, const TripleStore& store,
                      const Vocabulary& vocab) {
  std::ofstream out = open_output(path);
  for (const Triple& t : store.triples()) {
    out << vocab.entity_name(t.head) << '\t' << vocab.relation_name(t.rel) << '\t'
        << vocab.entity_name(t.tail) << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

std::vector<LabelRow> read_labels_tsv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<LabelRow> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    rstrip(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    }
    out.push_back({std::string(fields[0]), std::string(fields[1]), std::string(fields[2])});
  }
  return out;
}

void write_labels_tsv(const std::filesystem::path& path, std::span<const LabelRow> rows) {
  std::ofstream out = open_output(path);
  for (const LabelRow& r : rows) out << r.entity << '\t' << r.type << '\t' << r.group << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

SemanticLabels attach_labels(std::span<const LabelRow> rows, const Vocabulary& vocab,
                             std::size_t* skipped_unknown) {
  SemanticLabels labels;
  std::size_t skipped = 0;
  for (const LabelRow& row : rows) {
    const auto id = vocab.entity_id(row.entity);
    if (!id) {
      ++skipped;
      continue;
    }
    labels.assign(*id, labels.intern_type(row.type, row.group));
  }
  if (skipped_unknown) *skipped_unknown = skipped;
  return labels;
}

}  // namespace kge
