#include "kge/embedding_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kge {

namespace {

constexpr char kCheckpointMagic[8] = {'K', 'G', 'E', 'C', 'K', 'P', '0', '1'};
constexpr char kEmbeddingMagic[8] = {'K', 'G', 'E', 'E', 'M', 'B', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }
float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

void write_f32_block(std::ostream& out, std::span<const double> values) {
  for (const double v : values) put_f32(out, static_cast<float>(v));
}

void read_f32_block(std::istream& in, std::span<double> values) {
  for (double& v : values) v = static_cast<double>(get_f32(in));
}

bool is_complex_layout(ModelKind kind, ExportWhat what) {
  if (kind == ModelKind::complex) return true;  // both tables interleave re/im
  if (kind == ModelKind::rotate) return what == ExportWhat::entities;  // relations are phases
  return false;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, static_cast<std::uint32_t>(ckpt.model.kind));
  put_u32(out, static_cast<std::uint32_t>(ckpt.model.norm_order));
  put_u64(out, ckpt.model.dim);
  put_u64(out, ckpt.table.num_entities);
  put_u64(out, ckpt.table.num_relations);
  put_f64(out, ckpt.model.margin);
  put_f64(out, ckpt.model.adversarial_temperature);
  put_f64(out, ckpt.model.l2_lambda);
  put_u64(out, ckpt.epoch);
  put_f64(out, ckpt.valid_mrr);
  write_f32_block(out, ckpt.table.entities);
  write_f32_block(out, ckpt.table.relations);
  if (!out) throw InputError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw InputError("not a checkpoint file: " + path.string());
  }
  Checkpoint ckpt;
  const std::uint32_t kind = get_u32(in);
  if (kind > 4) throw InputError("bad model kind in checkpoint: " + std::to_string(kind));
  ckpt.model.kind = static_cast<ModelKind>(kind);
  ckpt.model.norm_order = static_cast<int>(get_u32(in));
  ckpt.model.dim = get_u64(in);
  const std::uint64_t num_entities = get_u64(in);
  const std::uint64_t num_relations = get_u64(in);
  ckpt.model.margin = get_f64(in);
  ckpt.model.adversarial_temperature = get_f64(in);
  ckpt.model.l2_lambda = get_f64(in);
  ckpt.epoch = get_u64(in);
  ckpt.valid_mrr = get_f64(in);
  ckpt.model.validate();

  ckpt.table.num_entities = num_entities;
  ckpt.table.num_relations = num_relations;
  ckpt.table.entity_dim = ckpt.model.entity_dim();
  ckpt.table.relation_dim = ckpt.model.relation_dim();
  ckpt.table.entities.resize(num_entities * ckpt.table.entity_dim);
  ckpt.table.relations.resize(num_relations * ckpt.table.relation_dim);
  read_f32_block(in, ckpt.table.entities);
  read_f32_block(in, ckpt.table.relations);
  if (!in) throw InputError("truncated checkpoint: " + path.string());
  return ckpt;
}

void export_embeddings(const std::filesystem::path& path, const Checkpoint& ckpt,
                       const Vocabulary& vocab, ExportFormat format, ExportWhat what) {
  const bool entities = what == ExportWhat::entities;
  const std::size_t count = entities ? ckpt.table.num_entities : ckpt.table.num_relations;
  const std::size_t dim = entities ? ckpt.table.entity_dim : ckpt.table.relation_dim;
  const std::size_t named =
      entities ? vocab.entity_count() : vocab.relation_count();
  if (named != count) {
    throw InputError("vocabulary size " + std::to_string(named) +
                     " does not match checkpoint rows " + std::to_string(count));
  }
  auto name_of = [&](std::size_t i) -> const std::string& {
    return entities ? vocab.entity_name(static_cast<EntityId>(i))
                    : vocab.relation_name(static_cast<RelationId>(i));
  };
  auto row_of = [&](std::size_t i) {
    return entities ? ckpt.table.entity(static_cast<EntityId>(i))
                    : ckpt.table.relation(static_cast<RelationId>(i));
  };
  const bool complex_layout = is_complex_layout(ckpt.model.kind, what);

  if (format == ExportFormat::tsv) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path.string());
    out << count << ' ' << dim;
    if (complex_layout) out << " complex";
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < count; ++i) {
      out << name_of(i);
      for (const double v : row_of(i)) {
        std::snprintf(buf, sizeof(buf), " %.9g", v);
        out << buf;
      }
      out << '\n';
    }
    if (!out) throw InputError("write failed: " + path.string());
    return;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path.string());
  out.write(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  put_u64(out, count);
  put_u64(out, dim);
  out.put(complex_layout ? 1 : 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string& name = name_of(i);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (std::size_t i = 0; i < count; ++i) write_f32_block(out, row_of(i));
  if (!out) throw InputError("write failed: " + path.string());
}

namespace {

EmbeddingSet load_embedding_binary(const std::filesystem::path& path, std::ifstream& in) {
  EmbeddingSet set;
  set.name = path.stem().string();
  const std::uint64_t count = get_u64(in);
  const std::uint64_t dim = get_u64(in);
  in.get();  // complex flag; layout is opaque to probes
  set.entities.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_u32(in);
    if (!in || len > (1u << 20)) throw InputError("corrupt embedding file: " + path.string());
    std::string name(len, '\0');
    in.read(name.data(), len);
    set.entities[i] = std::move(name);
  }
  set.features.rows = count;
  set.features.cols = dim;
  set.features.data.resize(count * dim);
  read_f32_block(in, set.features.data);
  if (!in) throw InputError("truncated embedding file: " + path.string());
  return set;
}

EmbeddingSet load_embedding_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw InputError("empty embedding file: " + path.string());
  std::istringstream hs(header);
  std::size_t count = 0, dim = 0;
  if (!(hs >> count >> dim)) throw InputError("bad embedding header: " + path.string());

  EmbeddingSet set;
  set.name = path.stem().string();
  set.entities.reserve(count);
  set.features.rows = count;
  set.features.cols = dim;
  set.features.data.resize(count * dim);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= count) throw InputError(path.string() + ": more rows than the header declares");
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    set.entities.push_back(name);
    auto dst = set.features.row(row);
    for (std::size_t j = 0; j < dim; ++j) {
      if (!(ls >> dst[j])) {
        throw InputError(path.string() + ": row " + std::to_string(row + 2) + " has fewer than " +
                         std::to_string(dim) + " values");
      }
    }
    ++row;
  }
  if (row != count) {
    throw InputError(path.string() + ": header declares " + std::to_string(count) +
                     " rows, found " + std::to_string(row));
  }
  return set;
}

}  // namespace

EmbeddingSet load_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path.string());
  char magic[8] = {};
  in.read(magic, 8);
  if (in && std::memcmp(magic, kEmbeddingMagic, 8) == 0) {
    return load_embedding_binary(path, in);
  }
  return load_embedding_tsv(path);
}

}  // namespace kge
