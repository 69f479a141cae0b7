#include "kge/run_config.hpp"

#include <algorithm>
#include <array>
#include <fstream>

namespace kge {

namespace {

// every key any subcommand understands; one flat namespace keeps run
// sidecars diffable across commands
constexpr std::array kKnownKeys = {
    // shared
    "seed", "workers", "out",
    // file paths
    "triples", "labels", "train", "valid", "test", "closure", "checkpoint", "resume", "log",
    "concepts", "relations", "semantics", "semgroups", "reciprocals", "embeddings", "tasks",
    "out_triples", "out_labels", "out_stats", "out_dir",
    // ingest filters
    "source", "suppress", "groups", "exclude_types", "flip_direction",
    // split
    "train_fraction", "valid_fraction", "test_fraction",
    // model
    "model", "dim", "margin", "norm", "alpha", "lambda",
    // trainer
    "learning_rate", "num_negative", "num_epoch", "batch_size", "eval_every", "valid_sample",
    // eval
    "target", "queries", "strata", "strata_relations", "dump_ranks",
    // probe / power
    "kind", "dropout", "probe_train_fraction", "probe_epochs", "probe_learning_rate",
    "probe_batch_size", "samples", "percentile",
    // export
    "format", "what",
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

bool RunConfig::is_known(std::string_view key) {
  return std::find(kKnownKeys.begin(), kKnownKeys.end(), key) != kKnownKeys.end();
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(std::string_view(trimmed).substr(0, eq));
    const std::string value = trim(std::string_view(trimmed).substr(eq + 1));
    if (!is_known(key)) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key +
                       "'");
    }
    values_.try_emplace(key, value);  // flags were set first and win
  }
}

void RunConfig::set(std::string_view key, std::string_view value) {
  if (!is_known(key)) throw InputError("unknown config key '" + std::string(key) + "'");
  values_[std::string(key)] = std::string(value);
}

bool RunConfig::has(std::string_view key) const { return values_.count(std::string(key)) != 0; }

std::string RunConfig::get(std::string_view key) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) throw InputError("missing required config key '" + std::string(key) + "'");
  return it->second;
}

std::string RunConfig::get_or(std::string_view key, std::string_view fallback) const {
  auto it = values_.find(std::string(key));
  return it == values_.end() ? std::string(fallback) : it->second;
}

double RunConfig::get_double(std::string_view key, double fallback) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw InputError("config key '" + std::string(key) + "' is not a number: '" + it->second +
                     "'");
  }
}

std::uint64_t RunConfig::get_u64(std::string_view key, std::uint64_t fallback) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) return fallback;
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw InputError("config key '" + std::string(key) + "' is not an integer: '" + it->second +
                     "'");
  }
}

bool RunConfig::get_bool(std::string_view key, bool fallback) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InputError("config key '" + std::string(key) + "' is not a boolean: '" + v + "'");
}

void RunConfig::write_resolved(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write config file: " + path.string());
  for (const auto& [key, value] : values_) out << key << '=' << value << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace kge
