// kge: knowledge-graph embedding toolkit.
// Subcommands: prep, split, train, eval, probe, power, analyze-relations,
// export. Exit codes: 0 success, 2 usage/input error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "kge/embedding_io.hpp"
#include "kge/eval.hpp"
#include "kge/ingest.hpp"
#include "kge/probe.hpp"
#include "kge/run_config.hpp"
#include "kge/splitter.hpp"
#include "kge/trainer.hpp"
#include "kge/tsv.hpp"

namespace fs = std::filesystem;
using namespace kge;

namespace {

constexpr std::uint64_t kSaltSplit = 0x73706c74;
constexpr std::uint64_t kSaltProbe = 0x70726f62;
constexpr std::uint64_t kSaltPower = 0x706f7772;

struct Ctx {
  RunConfig cfg;
  std::string config_path;
};

void bind_option(CLI::App* cmd, Ctx& ctx, const char* flag, const char* key, const char* help) {
  cmd->add_option_function<std::string>(
       flag, [&ctx, key](const std::string& v) { ctx.cfg.set(key, v); }, help)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

void bind_flag(CLI::App* cmd, Ctx& ctx, const char* flag, const char* key, const char* help) {
  cmd->add_flag_callback(
      flag, [&ctx, key]() { ctx.cfg.set(key, "1"); }, help);
}

void add_common(CLI::App* cmd, Ctx& ctx) {
  cmd->add_option("--config", ctx.config_path, "flat key=value config file (flags win)");
  bind_option(cmd, ctx, "--seed", "seed", "master seed; per-component seeds derive from it");
  bind_option(cmd, ctx, "--workers", "workers", "worker threads; 1 = fully deterministic");
}

void finish_config(Ctx& ctx) {
  if (!ctx.config_path.empty()) ctx.cfg.load_file(ctx.config_path);
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t pos = csv.find(',', start);
    if (pos == std::string::npos) {
      if (start < csv.size()) out.push_back(csv.substr(start));
      break;
    }
    if (pos > start) out.push_back(csv.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path.string());
  return out;
}

ModelConfig model_from(const RunConfig& cfg) {
  const std::string name = cfg.get("model");
  const auto kind = model_kind_from(name);
  if (!kind) {
    std::string valid;
    for (const auto n : model_kind_names()) {
      if (!valid.empty()) valid += ", ";
      valid += n;
    }
    throw InputError("unknown model kind '" + name + "'; valid kinds: " + valid);
  }
  ModelConfig model;
  model.kind = *kind;
  model.dim = cfg.get_u64("dim", 512);
  model.margin = cfg.get_double("margin", 6.0);
  model.norm_order = static_cast<int>(cfg.get_u64("norm", 1));
  model.adversarial_temperature = cfg.get_double("alpha", 0.0);
  model.l2_lambda = cfg.get_double("lambda", 0.0);
  model.validate();
  return model;
}

TrainConfig trainer_from(const RunConfig& cfg) {
  TrainConfig train_cfg;
  train_cfg.learning_rate = cfg.get_double("learning_rate", 5e-4);
  train_cfg.num_negative = cfg.get_u64("num_negative", 60);
  train_cfg.num_epoch = cfg.get_u64("num_epoch", 2000);
  train_cfg.batch_size = cfg.get_u64("batch_size", 1024);
  train_cfg.eval_every = cfg.get_u64("eval_every", 50);
  train_cfg.valid_sample = cfg.get_u64("valid_sample", 5000);
  train_cfg.seed = cfg.get_u64("seed", 0);
  train_cfg.worker_count = cfg.get_u64("workers", 1);
  train_cfg.validate();
  return train_cfg;
}

struct LoadedDataset {
  Vocabulary vocab;
  TripleStore train;
  TripleStore valid;
  TripleStore test;
  TripleStore closure;
  bool has_test = false;
  bool has_closure = false;
  std::size_t closure_skipped = 0;
};

/// Rebuilds the vocabulary deterministically from the split files (train,
/// then valid, then test order) so ids match across train/eval/export runs.
LoadedDataset load_dataset(const RunConfig& cfg, bool require_test) {
  LoadedDataset data;
  const auto train_raw = read_triple_tsv(cfg.get("train"));
  const auto valid_raw = read_triple_tsv(cfg.get("valid"));
  std::vector<RawTriple> test_raw;
  if (cfg.has("test")) {
    test_raw = read_triple_tsv(cfg.get("test"));
    data.has_test = true;
  } else if (require_test) {
    throw InputError("missing required config key 'test'");
  }

  std::vector<RawTriple> all;
  all.reserve(train_raw.size() + valid_raw.size() + test_raw.size());
  all.insert(all.end(), train_raw.begin(), train_raw.end());
  all.insert(all.end(), valid_raw.begin(), valid_raw.end());
  all.insert(all.end(), test_raw.begin(), test_raw.end());
  data.vocab = build_vocabulary(all);

  data.train = encode_triples(train_raw, data.vocab, Split::train);
  data.valid = encode_triples(valid_raw, data.vocab, Split::valid);
  if (data.has_test) data.test = encode_triples(test_raw, data.vocab, Split::test);
  if (cfg.has("closure")) {
    ClosureLoadResult closure = load_closure(cfg.get("closure"), data.vocab);
    data.closure = std::move(closure.store);
    data.closure_skipped = closure.skipped_unknown;
    data.has_closure = true;
    if (data.closure_skipped > 0) {
      std::cerr << "warning: skipped " << data.closure_skipped
                << " closure triples naming unknown entities or relations\n";
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// prep

int run_prep(Ctx& ctx) {
  finish_config(ctx);
  RunConfig& cfg = ctx.cfg;
  const fs::path out_triples = cfg.get("out_triples");
  const fs::path out_labels = cfg.get_or("out_labels", "");
  const fs::path out_stats = cfg.get_or("out_stats", "");

  std::vector<RawTriple> raw;
  std::vector<LabelRow> label_rows;
  std::size_t multi_typed = 0;
  std::size_t concepts_retained = 0;
  std::string mode;

  if (cfg.has("triples")) {
    mode = "tsv";
    raw = read_triple_tsv(cfg.get("triples"));
    if (cfg.has("labels")) label_rows = read_labels_tsv(cfg.get("labels"));
  } else {
    mode = "rrf";
    RrfConfig rrf;
    rrf.source_filter = cfg.get_or("source", "");
    if (cfg.has("suppress")) {
      rrf.suppressed_flags.clear();
      for (const std::string& flag : split_list(cfg.get("suppress")))
        rrf.suppressed_flags.insert(flag);
    }
    for (const std::string& group : split_list(cfg.get_or("groups", "")))
      rrf.allowed_groups.insert(group);
    for (const std::string& type : split_list(cfg.get_or("exclude_types", "")))
      rrf.excluded_types.insert(type);
    rrf.flip_direction = cfg.get_bool("flip_direction", false);

    auto concepts = parse_concepts(cfg.get("concepts"), rrf);
    const TypeGroupMap group_map = load_semantic_groups(cfg.get("semgroups"));
    SemanticsResult semantics = parse_semantics(cfg.get("semantics"), rrf, group_map, concepts);
    raw = parse_relations(cfg.get("relations"), rrf, concepts);
    label_rows = std::move(semantics.labels);
    multi_typed = semantics.multi_typed;
    concepts_retained = concepts.size();
  }

  const Vocabulary vocab = build_vocabulary(raw);
  EncodeStats encode_stats;
  const TripleStore store = encode_triples(raw, vocab, Split::train, &encode_stats);
  write_triple_tsv(out_triples, store, vocab);

  // labels for entities that made it into the graph, in vocabulary order
  std::size_t labels_written = 0;
  if (!out_labels.empty()) {
    std::unordered_map<std::string, const LabelRow*> by_entity;
    for (const LabelRow& row : label_rows) by_entity.try_emplace(row.entity, &row);
    std::vector<LabelRow> kept;
    for (EntityId e = 0; e < vocab.entity_count(); ++e) {
      auto it = by_entity.find(vocab.entity_name(e));
      if (it != by_entity.end()) kept.push_back(*it->second);
    }
    labels_written = kept.size();
    write_labels_tsv(out_labels, kept);
  }

  std::ostringstream stats;
  stats << "mode\t" << mode << "\n";
  if (mode == "rrf") stats << "concepts_retained\t" << concepts_retained << "\n";
  stats << "entities\t" << vocab.entity_count() << "\n";
  stats << "relation_types\t" << vocab.relation_count() << "\n";
  stats << "facts\t" << store.size() << "\n";
  stats << "duplicates_dropped\t" << encode_stats.duplicates_dropped << "\n";
  stats << "labels\t" << labels_written << "\n";
  stats << "multi_typed_concepts\t" << multi_typed << "\n";
  if (!out_stats.empty()) open_out(out_stats) << stats.str();
  std::cout << stats.str();

  cfg.write_resolved(out_triples.string() + ".config");
  return 0;
}

// ---------------------------------------------------------------------------
// split

int run_split(Ctx& ctx) {
  finish_config(ctx);
  RunConfig& cfg = ctx.cfg;
  const fs::path out_dir = cfg.get("out_dir");
  fs::create_directories(out_dir);

  const auto raw = read_triple_tsv(cfg.get("triples"));
  const Vocabulary vocab = build_vocabulary(raw);
  EncodeStats encode_stats;
  const TripleStore store = encode_triples(raw, vocab, Split::train, &encode_stats);

  ReciprocalMap reciprocals;
  std::size_t reciprocal_skipped = 0;
  if (cfg.has("reciprocals")) {
    reciprocals = ReciprocalMap::from_names(read_reciprocal_pairs(cfg.get("reciprocals")), vocab,
                                            &reciprocal_skipped);
  }

  SplitSpec spec;
  spec.train_fraction = cfg.get_double("train_fraction", 0.9);
  spec.valid_fraction = cfg.get_double("valid_fraction", 0.05);
  spec.test_fraction = cfg.get_double("test_fraction", 0.05);
  spec.seed = derive_seed(cfg.get_u64("seed", 0), kSaltSplit);
  spec.validate();

  const auto groups = pair_reciprocals(store, reciprocals);
  SplitResult result = split(store, groups, spec);
  const RepairStats repair = repair_unseen(result.train, result.valid, result.test, &reciprocals);

  write_triple_tsv(out_dir / "train.tsv", result.train, vocab);
  write_triple_tsv(out_dir / "valid.tsv", result.valid, vocab);
  write_triple_tsv(out_dir / "test.tsv", result.test, vocab);

  const UnseenCounts valid_unseen = count_unseen(result.train, result.valid);
  const UnseenCounts test_unseen = count_unseen(result.train, result.test);

  std::ostringstream stats;
  stats << "entities\t" << vocab.entity_count() << "\n";
  stats << "relation_types\t" << vocab.relation_count() << "\n";
  stats << "facts\t" << store.size() << "\n";
  stats << "train\t" << result.train.size() << "\n";
  stats << "valid\t" << result.valid.size() << "\n";
  stats << "test\t" << result.test.size() << "\n";
  stats << "duplicates_dropped\t" << encode_stats.duplicates_dropped << "\n";
  stats << "reciprocal_pairs\t" << reciprocals.size() / 2 << "\n";
  stats << "reciprocal_names_skipped\t" << reciprocal_skipped << "\n";
  stats << "moved_to_train_from_valid\t" << repair.moved_from_valid << "\n";
  stats << "moved_to_train_from_test\t" << repair.moved_from_test << "\n";
  stats << "repair_passes\t" << repair.passes << "\n";
  stats << "unseen_valid_entities\t" << valid_unseen.entities << "\n";
  stats << "unseen_valid_relations\t" << valid_unseen.relations << "\n";
  stats << "unseen_test_entities\t" << test_unseen.entities << "\n";
  stats << "unseen_test_relations\t" << test_unseen.relations << "\n";
  open_out(out_dir / "stats.txt") << stats.str();
  std::cout << stats.str();

  cfg.write_resolved(out_dir / "split.config");
  return 0;
}

// ---------------------------------------------------------------------------
// train

int run_train(Ctx& ctx) {
  finish_config(ctx);
  RunConfig& cfg = ctx.cfg;
  const fs::path ckpt_path = cfg.get("checkpoint");
  const ModelConfig model = model_from(cfg);
  const TrainConfig train_cfg = trainer_from(cfg);
  const LoadedDataset data = load_dataset(cfg, /*require_test=*/false);

  DatasetSplits splits;
  splits.train = &data.train;
  splits.valid = &data.valid;
  if (data.has_test) splits.test = &data.test;
  if (data.has_closure) splits.closure = &data.closure;

  Checkpoint resume;
  const Checkpoint* initial = nullptr;
  if (cfg.has("resume")) {
    resume = load_checkpoint(cfg.get("resume"));
    initial = &resume;
  }

  const fs::path log_path = cfg.get_or("log", ckpt_path.string() + ".log");
  std::ofstream log = open_out(log_path);
  log << "epoch\tmean_loss\tvalid_mrr\n";
  auto on_epoch = [&](const EpochLog& entry) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", entry.mean_loss);
    log << entry.epoch << '\t' << buf << '\t';
    if (entry.valid_mrr) {
      std::snprintf(buf, sizeof(buf), "%.6f", *entry.valid_mrr);
      log << buf << '\n';
      std::cout << "epoch " << entry.epoch << " loss " << entry.mean_loss << " valid_mrr "
                << *entry.valid_mrr << "\n";
    } else {
      log << "-\n";
    }
  };

  const TrainResult result = train(splits, train_cfg, model, initial, on_epoch);
  save_checkpoint(ckpt_path, result.best);
  cfg.write_resolved(ckpt_path.string() + ".config");
  std::cout << "best checkpoint: epoch " << result.best.epoch << " valid_mrr "
            << result.best.valid_mrr << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

void write_metric_row(std::ostream& out, std::string_view model, std::string_view target,
                      std::string_view stratum, const MetricSummary& s) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f", s.mr, s.mrr, s.mq100,
                s.hits1, s.hits3, s.hits10);
  out << model << '\t' << target << '\t' << stratum << '\t' << s.query_count << '\t' << buf
      << '\n';
}

int run_eval(Ctx& ctx) {
  finish_config(ctx);
  RunConfig& cfg = ctx.cfg;
  const Checkpoint ckpt = load_checkpoint(cfg.get("checkpoint"));
  const LoadedDataset data = load_dataset(cfg, /*require_test=*/true);
  const std::string out_prefix = cfg.get("out");
  const std::string target = cfg.get_or("target", "both");
  const std::string queries_name = cfg.get_or("queries", "test");
  const std::size_t workers = cfg.get_u64("workers", 1);

  if (ckpt.table.num_entities < data.vocab.entity_count() ||
      ckpt.table.num_relations < data.vocab.relation_count()) {
    throw InputError("checkpoint is smaller than the dataset vocabulary");
  }

  FilterSet filter;
  filter.add(data.train);
  filter.add(data.valid);
  filter.add(data.test);
  if (data.has_closure) filter.add(data.closure);

  if (queries_name != "valid" && queries_name != "test") {
    throw InputError("queries must be 'valid' or 'test', got '" + queries_name + "'");
  }
  const TripleStore& queries = queries_name == "valid" ? data.valid : data.test;

  RankingOutcome outcome;
  if (target == "relation") {
    outcome = relation_prediction(queries, ckpt.table, ckpt.model, filter, workers);
  } else {
    LinkTarget link_target;
    if (target == "head") {
      link_target = LinkTarget::head;
    } else if (target == "tail") {
      link_target = LinkTarget::tail;
    } else if (target == "both") {
      link_target = LinkTarget::both;
    } else {
      throw InputError("target must be head, tail, both, or relation; got '" + target + "'");
    }
    outcome = link_prediction(queries, ckpt.table, ckpt.model, filter, link_target, workers);
  }

  const MetricSummary overall = outcome.summary();
  const std::string model_name(to_string(ckpt.model.kind));

  std::ofstream metrics = open_out(out_prefix + ".metrics.tsv");
  metrics << "model\ttarget\tstratum\tqueries\tmr\tmrr\tmq100\thits1\thits3\thits10\n";
  write_metric_row(metrics, model_name, target, "all", overall);

  const std::string strata = cfg.get_or("strata", "none");
  std::vector<RelationId> named;
  for (const std::string& name : split_list(cfg.get_or("strata_relations", ""))) {
    const auto rel = data.vocab.relation_id(name);
    if (!rel) throw InputError("unknown relation in strata_relations: '" + name + "'");
    named.push_back(*rel);
  }
  if (strata != "none" && strata != "categories") {
    throw InputError("strata must be 'categories' or 'none', got '" + strata + "'");
  }
  if (strata == "categories" || !named.empty()) {
    if (!cfg.has("labels")) throw InputError("strata require a labels file");
    const auto label_rows = read_labels_tsv(cfg.get("labels"));
    const SemanticLabels labels = attach_labels(label_rows, data.vocab);
    const TripleStore* stores[] = {&data.train, &data.valid, &data.test};
    std::vector<RelationCategory> categories(data.vocab.relation_count());
    for (RelationId r = 0; r < categories.size(); ++r) {
      categories[r] = categorize_relation(r, stores, labels, &data.vocab);
    }
    std::vector<StratumMetrics> rows = stratified_metrics(outcome, categories, named, &data.vocab);
    if (strata != "categories") {
      // only the explicitly named relations were requested
      rows.erase(rows.begin(), rows.end() - static_cast<std::ptrdiff_t>(named.size()));
    }
    for (const StratumMetrics& row : rows) {
      write_metric_row(metrics, model_name, target, row.name, row.metrics);
    }
  }

  std::ofstream summary = open_out(out_prefix + ".summary.txt");
  char buf[64];
  summary << "model=" << model_name << "\ntarget=" << target << "\nqueries=" << overall.query_count
          << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", overall.mr);
  summary << "mr=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", overall.mrr);
  summary << "mrr=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", overall.mq100);
  summary << "mq100=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", overall.hits1);
  summary << "hits1=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", overall.hits3);
  summary << "hits3=" << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", overall.hits10);
  summary << "hits10=" << buf << "\n";

  if (cfg.get_bool("dump_ranks", false)) {
    std::ofstream ranks = open_out(out_prefix + ".ranks.tsv");
    ranks << "head\trelation\ttail\tslot\trank\tpool\n";
    for (const QueryRecord& rec : outcome.records) {
      const char* slot = rec.slot == QuerySlot::head   ? "head"
                         : rec.slot == QuerySlot::tail ? "tail"
                                                       : "relation";
      ranks << data.vocab.entity_name(rec.triple.head) << '\t'
            << data.vocab.relation_name(rec.triple.rel) << '\t'
            << data.vocab.entity_name(rec.triple.tail) << '\t' << slot << '\t' << rec.rank << '\t'
            << rec.pool_size << '\n';
    }
  }

  cfg.write_resolved(out_prefix + ".eval.config");
  std::printf("%s %s mrr %.6f mq100 %.6f hits@1 %.6f hits@10 %.6f (%zu queries)\n",
              model_name.c_str(), target.c_str(), overall.mrr, overall.mq100, overall.hits1,
              overall.hits10, overall.query_count);
  return 0;
}

// ---------------------------------------------------------------------------
// export

int run_export(Ctx& ctx) {
  finish_config(ctx);
  RunConfig& cfg = ctx.cfg;
  const Checkpoint ckpt = load_checkpoint(cfg.get("checkpoint"));
  const LoadedDataset data = load_dataset(cfg, /*require_test=*/false);
  const std::string format_name = cfg.get_or("format", "tsv");
  const std::string what_name = cfg.get_or("what", "entities");
  const fs::path out = cfg.get("out");

  ExportFormat format;
  if (format_name == "tsv") {
    format = ExportFormat::tsv;
  } else if (format_name == "binary") {
    format = ExportFormat::binary;
  } else {
    throw InputError("format must be 'tsv' or 'binary', got '" + format_name + "'");
  }
  ExportWhat what;
  if (what_name == "entities") {
    what = ExportWhat::entities;
  } else if (what_name == "relations") {
    what = ExportWhat::relations;
  } else {
    throw InputError("what must be 'entities' or 'relations', got '" + what_name + "'");
  }

  export_embeddings(out, ckpt, data.vocab, format, what);
  cfg.write_resolved(out.string() + ".config");
  std::cout << "exported " << what_name << " to " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// probe

ProbeConfig probe_from(const RunConfig& cfg) {
  ProbeConfig probe;
  probe.dropout = cfg.get_double("dropout", 0.1);
  probe.train_fraction = cfg.get_double("probe_train_fraction", 0.9);
  probe.epochs = cfg.get_u64("probe_epochs", 100);
  probe.learning_rate = cfg.get_double("probe_learning_rate", 0.1);
  probe.batch_size = cfg.get_u64("probe_batch_size", 256);
  probe.seed = derive_seed(cfg.get_u64("seed", 0), kSaltProbe);
  probe.validate();
  return probe;
}

std::vector<EmbeddingSet> load_embedding_sets(const RunConfig& cfg) {
  std::vector<EmbeddingSet> sets;
  for (const std::string& path : split_list(cfg.get("embeddings"))) {
    sets.push_back(load_embedding_file(path));
  }
  if (sets.empty()) throw InputError("no embedding files given");
  return sets;
}

int run_probe(Ctx& ctx) {
  finish_config(ctx);
  RunConfig& cfg = ctx.cfg;
  const std::vector<EmbeddingSet> sets = load_embedding_sets(cfg);
  const auto label_rows = read_labels_tsv(cfg.get("labels"));
  const ProbeConfig probe = probe_from(cfg);
  const std::string kind = cfg.get_or("kind", "both");
  const fs::path out = cfg.get("out");

  const ProbeDataset dataset = build_probe_dataset(sets, label_rows);
  std::vector<LabelKind> kinds;
  if (kind == "group" || kind == "both") kinds.push_back(LabelKind::semantic_group);
  if (kind == "type" || kind == "both") kinds.push_back(LabelKind::semantic_type);
  if (kinds.empty()) throw InputError("kind must be 'group', 'type', or 'both'");

  std::ofstream report = open_out(out);
  report << "model\tlabel_kind\taccuracy\tclasses\ttrain\ttest\n";
  for (std::size_t m = 0; m < sets.size(); ++m) {
    for (const LabelKind label_kind : kinds) {
      const auto& labels =
          label_kind == LabelKind::semantic_group ? dataset.group_ids : dataset.type_ids;
      const ClassifyResult result = classify(dataset.per_model[m], labels, probe);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", result.accuracy);
      report << sets[m].name << '\t' << to_string(label_kind) << '\t' << buf << '\t'
             << result.class_count << '\t' << result.train_count << '\t' << result.test_count
             << '\n';
      std::cout << sets[m].name << " " << to_string(label_kind) << " accuracy " << result.accuracy
                << "\n";
    }
  }
  cfg.write_resolved(out.string() + ".config");
  return 0;
}

// ---------------------------------------------------------------------------
// power

int run_power(Ctx& ctx) {
  finish_config(ctx);
  RunConfig& cfg = ctx.cfg;
  const std::vector<EmbeddingSet> sets = load_embedding_sets(cfg);
  const auto label_rows = read_labels_tsv(cfg.get("labels"));
  const auto task_rows = read_power_tasks(cfg.get("tasks"));
  const std::size_t samples = cfg.get_u64("samples", 10000);
  const double percentile = cfg.get_double("percentile", 95.0);
  const std::uint64_t seed = derive_seed(cfg.get_u64("seed", 0), kSaltPower);
  const fs::path out = cfg.get("out");

  std::ofstream report = open_out(out);
  report << "model\ttask\tpairs\tpower\tthreshold\n";
  for (const EmbeddingSet& set : sets) {
    const auto tasks = build_power_tasks(task_rows, set, label_rows, samples, percentile);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      Rng rng = make_rng(derive_seed(seed, t));  // per-task generator
      const PowerResult result = bootstrap_power(set.features, tasks[t], rng);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f\t%.6f", result.power, result.threshold);
      report << set.name << '\t' << tasks[t].name << '\t' << tasks[t].observed.size() << '\t'
             << buf << '\n';
      std::cout << set.name << " " << tasks[t].name << " power " << result.power << "\n";
    }
  }
  cfg.write_resolved(out.string() + ".config");
  return 0;
}

// ---------------------------------------------------------------------------
// analyze-relations

int run_analyze(Ctx& ctx) {
  finish_config(ctx);
  RunConfig& cfg = ctx.cfg;
  const LoadedDataset data = load_dataset(cfg, /*require_test=*/true);
  const auto label_rows = read_labels_tsv(cfg.get("labels"));
  const SemanticLabels labels = attach_labels(label_rows, data.vocab);
  const fs::path out = cfg.get("out");

  const TripleStore* stores[] = {&data.train, &data.valid, &data.test};
  auto count_in = [&](const TripleStore& store, RelationId rel) {
    std::size_t n = 0;
    for (const Triple& t : store.triples()) n += t.rel == rel;
    return n;
  };

  std::ofstream report = open_out(out);
  report << "relation\thead_cardinality\ttail_cardinality\thomogeneous\tcategory\ttrain\tvalid\t"
            "test\n";
  for (RelationId rel = 0; rel < data.vocab.relation_count(); ++rel) {
    const RelationCategory cat = categorize_relation(rel, stores, labels, &data.vocab);
    report << data.vocab.relation_name(rel) << '\t' << (cat.head_many ? "M" : "1") << '\t'
           << (cat.tail_many ? "M" : "1") << '\t' << (cat.homogeneous ? 1 : 0) << '\t'
           << cat.label() << '\t' << count_in(data.train, rel) << '\t'
           << count_in(data.valid, rel) << '\t' << count_in(data.test, rel) << '\n';
  }
  cfg.write_resolved(out.string() + ".config");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-graph embedding toolkit"};
  app.require_subcommand(1);

  Ctx prep_ctx, split_ctx, train_ctx, eval_ctx, export_ctx, probe_ctx, power_ctx, analyze_ctx;
  std::function<int()> runner;

  CLI::App* prep = app.add_subcommand("prep", "parse release files or triple TSVs into the "
                                              "canonical triples + labels files");
  add_common(prep, prep_ctx);
  bind_option(prep, prep_ctx, "--triples", "triples", "triple TSV passthrough input");
  bind_option(prep, prep_ctx, "--labels", "labels", "labels TSV passthrough input");
  bind_option(prep, prep_ctx, "--concepts", "concepts", "concepts file (pipe-delimited)");
  bind_option(prep, prep_ctx, "--relations", "relations", "relations file (pipe-delimited)");
  bind_option(prep, prep_ctx, "--semantics", "semantics", "semantic types file (pipe-delimited)");
  bind_option(prep, prep_ctx, "--semgroups", "semgroups", "semantic group table");
  bind_option(prep, prep_ctx, "--source", "source", "keep only rows from this source vocabulary");
  bind_option(prep, prep_ctx, "--suppress", "suppress",
              "comma-separated suppression flags to drop");
  bind_option(prep, prep_ctx, "--groups", "groups", "comma-separated allowed semantic groups");
  bind_option(prep, prep_ctx, "--exclude-types", "exclude_types",
              "comma-separated semantic types to drop");
  bind_flag(prep, prep_ctx, "--flip-direction", "flip_direction",
            "emit (first, label, second) instead of the release convention");
  bind_option(prep, prep_ctx, "--out-triples", "out_triples", "output triples TSV");
  bind_option(prep, prep_ctx, "--out-labels", "out_labels", "output labels TSV");
  bind_option(prep, prep_ctx, "--out-stats", "out_stats", "output stats file");
  prep->callback([&] { runner = [&] { return run_prep(prep_ctx); }; });

  CLI::App* split_cmd = app.add_subcommand(
      "split", "reciprocal-aware train/valid/test split with unseen-entity repair");
  add_common(split_cmd, split_ctx);
  bind_option(split_cmd, split_ctx, "--triples", "triples", "input triples TSV");
  bind_option(split_cmd, split_ctx, "--reciprocals", "reciprocals",
              "TSV of reciprocal relation name pairs");
  bind_option(split_cmd, split_ctx, "--train-fraction", "train_fraction", "train fraction");
  bind_option(split_cmd, split_ctx, "--valid-fraction", "valid_fraction", "valid fraction");
  bind_option(split_cmd, split_ctx, "--test-fraction", "test_fraction", "test fraction");
  bind_option(split_cmd, split_ctx, "--out-dir", "out_dir", "output directory");
  split_cmd->callback([&] { runner = [&] { return run_split(split_ctx); }; });

  CLI::App* train_cmd = app.add_subcommand("train", "negative-sampling SGD training");
  add_common(train_cmd, train_ctx);
  bind_option(train_cmd, train_ctx, "--train", "train", "train triples TSV");
  bind_option(train_cmd, train_ctx, "--valid", "valid", "valid triples TSV");
  bind_option(train_cmd, train_ctx, "--test", "test", "test triples TSV (joins the filter)");
  bind_option(train_cmd, train_ctx, "--closure", "closure", "closure triples TSV (filter only)");
  bind_option(train_cmd, train_ctx, "--model", "model",
              "model kind: transe, distmult, complex, simple, rotate");
  bind_option(train_cmd, train_ctx, "--dim", "dim", "real parameters per entity");
  bind_option(train_cmd, train_ctx, "--margin", "margin", "margin for translational scores");
  bind_option(train_cmd, train_ctx, "--norm", "norm", "norm order for transe (1 or 2)");
  bind_option(train_cmd, train_ctx, "--alpha", "alpha", "self-adversarial temperature");
  bind_option(train_cmd, train_ctx, "--lambda", "lambda", "L2 coefficient on touched rows");
  bind_option(train_cmd, train_ctx, "--learning-rate", "learning_rate", "SGD learning rate");
  bind_option(train_cmd, train_ctx, "--num-negative", "num_negative", "negatives per positive");
  bind_option(train_cmd, train_ctx, "--num-epoch", "num_epoch", "training epochs");
  bind_option(train_cmd, train_ctx, "--batch-size", "batch_size", "batch size");
  bind_option(train_cmd, train_ctx, "--eval-every", "eval_every",
              "epochs between validation evaluations");
  bind_option(train_cmd, train_ctx, "--valid-sample", "valid_sample",
              "validation subsample size (0 = all)");
  bind_option(train_cmd, train_ctx, "--checkpoint", "checkpoint", "output checkpoint path");
  bind_option(train_cmd, train_ctx, "--resume", "resume", "checkpoint to resume from");
  bind_option(train_cmd, train_ctx, "--log", "log", "training log path");
  train_cmd->callback([&] { runner = [&] { return run_train(train_ctx); }; });

  CLI::App* eval_cmd = app.add_subcommand("eval", "filtered ranking evaluation");
  add_common(eval_cmd, eval_ctx);
  bind_option(eval_cmd, eval_ctx, "--checkpoint", "checkpoint", "checkpoint to evaluate");
  bind_option(eval_cmd, eval_ctx, "--train", "train", "train triples TSV");
  bind_option(eval_cmd, eval_ctx, "--valid", "valid", "valid triples TSV");
  bind_option(eval_cmd, eval_ctx, "--test", "test", "test triples TSV");
  bind_option(eval_cmd, eval_ctx, "--closure", "closure", "closure triples TSV (filter only)");
  bind_option(eval_cmd, eval_ctx, "--queries", "queries", "query split: test (default) or valid");
  bind_option(eval_cmd, eval_ctx, "--target", "target", "head, tail, both, or relation");
  bind_option(eval_cmd, eval_ctx, "--strata", "strata", "'categories' for per-category metrics");
  bind_option(eval_cmd, eval_ctx, "--strata-relations", "strata_relations",
              "comma-separated relations reported individually");
  bind_option(eval_cmd, eval_ctx, "--labels", "labels", "labels TSV (needed for strata)");
  bind_flag(eval_cmd, eval_ctx, "--dump-ranks", "dump_ranks", "write per-query ranks");
  bind_option(eval_cmd, eval_ctx, "--out", "out", "output report prefix");
  eval_cmd->callback([&] { runner = [&] { return run_eval(eval_ctx); }; });

  CLI::App* export_cmd = app.add_subcommand("export", "write embeddings for external tools");
  add_common(export_cmd, export_ctx);
  bind_option(export_cmd, export_ctx, "--checkpoint", "checkpoint", "checkpoint to export");
  bind_option(export_cmd, export_ctx, "--train", "train", "train triples TSV (vocabulary)");
  bind_option(export_cmd, export_ctx, "--valid", "valid", "valid triples TSV (vocabulary)");
  bind_option(export_cmd, export_ctx, "--test", "test", "test triples TSV (vocabulary)");
  bind_option(export_cmd, export_ctx, "--format", "format", "tsv (default) or binary");
  bind_option(export_cmd, export_ctx, "--what", "what", "entities (default) or relations");
  bind_option(export_cmd, export_ctx, "--out", "out", "output path");
  export_cmd->callback([&] { runner = [&] { return run_export(export_ctx); }; });

  CLI::App* probe_cmd =
      app.add_subcommand("probe", "linear entity classification over exported embeddings");
  add_common(probe_cmd, probe_ctx);
  bind_option(probe_cmd, probe_ctx, "--embeddings", "embeddings",
              "comma-separated embedding files (one per model)");
  bind_option(probe_cmd, probe_ctx, "--labels", "labels", "labels TSV");
  bind_option(probe_cmd, probe_ctx, "--kind", "kind", "group, type, or both (default)");
  bind_option(probe_cmd, probe_ctx, "--dropout", "dropout", "input dropout probability");
  bind_option(probe_cmd, probe_ctx, "--probe-train-fraction", "probe_train_fraction",
              "train fraction");
  bind_option(probe_cmd, probe_ctx, "--probe-epochs", "probe_epochs", "probe training epochs");
  bind_option(probe_cmd, probe_ctx, "--probe-learning-rate", "probe_learning_rate",
              "probe learning rate");
  bind_option(probe_cmd, probe_ctx, "--probe-batch-size", "probe_batch_size", "probe batch size");
  bind_option(probe_cmd, probe_ctx, "--out", "out", "output report TSV");
  probe_cmd->callback([&] { runner = [&] { return run_probe(probe_ctx); }; });

  CLI::App* power_cmd =
      app.add_subcommand("power", "cosine-similarity bootstrap statistical power");
  add_common(power_cmd, power_ctx);
  bind_option(power_cmd, power_ctx, "--embeddings", "embeddings",
              "comma-separated embedding files (one per model)");
  bind_option(power_cmd, power_ctx, "--labels", "labels", "labels TSV");
  bind_option(power_cmd, power_ctx, "--tasks", "tasks",
              "task TSV: head, tail, label, head category, tail category");
  bind_option(power_cmd, power_ctx, "--samples", "samples", "bootstrap sample count");
  bind_option(power_cmd, power_ctx, "--percentile", "percentile", "significance percentile");
  bind_option(power_cmd, power_ctx, "--out", "out", "output report TSV");
  power_cmd->callback([&] { runner = [&] { return run_power(power_ctx); }; });

  CLI::App* analyze_cmd = app.add_subcommand(
      "analyze-relations", "cardinality/homogeneity categorization of relation types");
  add_common(analyze_cmd, analyze_ctx);
  bind_option(analyze_cmd, analyze_ctx, "--train", "train", "train triples TSV");
  bind_option(analyze_cmd, analyze_ctx, "--valid", "valid", "valid triples TSV");
  bind_option(analyze_cmd, analyze_ctx, "--test", "test", "test triples TSV");
  bind_option(analyze_cmd, analyze_ctx, "--labels", "labels", "labels TSV");
  bind_option(analyze_cmd, analyze_ctx, "--out", "out", "output report TSV");
  analyze_cmd->callback([&] { runner = [&] { return run_analyze(analyze_ctx); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    return runner ? runner() : 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
