#include <cstdlib>
#include <map>
#include <sstream>

#include "doctest.h"
#include "kge/embedding_io.hpp"
#include "kge/eval.hpp"
#include "kge/probe.hpp"
#include "kge/tsv.hpp"
#include "test_util.hpp"

using namespace kge;
using test::TempDir;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args, const TempDir& dir) {
  const std::string out_file = dir.file("cli_output.txt").string();
  const std::string command = std::string(KGE_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = test::read_file(out_file);
  return result;
}

/// Small clustered KG with reciprocal isa edges and labeled entities; types
/// map to groups consistently (one group per type).
void write_fixture(const TempDir& dir) {
  Rng rng = make_rng(12345);
  std::ostringstream triples;
  std::vector<std::size_t> parent(40, 0);
  for (std::size_t i = 1; i < 40; ++i) {
    parent[i] = uniform_below(rng, i);
    triples << "c" << i << "\tisa\tc" << parent[i] << "\n";
    triples << "c" << parent[i] << "\tinverse_isa\tc" << i << "\n";
  }
  for (std::size_t i = 0; i < 40; ++i) {
    triples << "c" << i << "\tattr\ta" << i % 4 << "\n";
  }
  test::write_file(dir.file("triples.tsv"), triples.str());
  test::write_file(dir.file("recips.tsv"), "isa\tinverse_isa\n");

  std::ostringstream labels;
  for (std::size_t i = 0; i < 40; ++i) {
    const std::size_t type = i % 4;
    labels << "c" << i << "\tConcept Type " << type << "\tGRP" << type % 2 << "\n";
  }
  for (std::size_t i = 0; i < 4; ++i) labels << "a" << i << "\tAttribute Type\tATTR\n";
  test::write_file(dir.file("labels.tsv"), labels.str());
}

std::string split_args(const TempDir& dir) {
  return "split --triples " + dir.file("triples.tsv").string() + " --reciprocals " +
         dir.file("recips.tsv").string() +
         " --train-fraction 0.8 --valid-fraction 0.1 --test-fraction 0.1 --seed 5 --out-dir " +
         dir.file("splits").string();
}

std::string train_args(const TempDir& dir, const std::string& ckpt,
                       const std::string& extra = "") {
  const std::string splits = dir.file("splits").string();
  return "train --train " + splits + "/train.tsv --valid " + splits + "/valid.tsv --test " +
         splits +
         "/test.tsv --model complex --dim 16 --margin 4 --alpha 1 --learning-rate 0.05 "
         "--num-negative 8 --num-epoch 30 --eval-every 10 --seed 9 --checkpoint " +
         dir.file(ckpt).string() + extra;
}

std::string dataset_args(const TempDir& dir) {
  const std::string splits = dir.file("splits").string();
  return " --train " + splits + "/train.tsv --valid " + splits + "/valid.tsv --test " + splits +
         "/test.tsv";
}

std::map<std::string, std::string> parse_kv(const std::string& text, char sep) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t pos = line.find(sep);
    if (pos != std::string::npos) out[line.substr(0, pos)] = line.substr(pos + 1);
  }
  return out;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  TempDir dir;
  CHECK(run_cli("", dir).exit_code == 2);
  CHECK(run_cli("unknown-subcommand", dir).exit_code == 2);
  const CliResult missing = run_cli("prep --triples /nonexistent.tsv --out-triples x.tsv", dir);
  CHECK(missing.exit_code == 2);
  CHECK(missing.output.find("/nonexistent.tsv") != std::string::npos);
}

TEST_CASE("prep TSV passthrough deduplicates and echoes resolved config") {
  TempDir dir;
  test::write_file(dir.file("in.tsv"), "A\tisa\tB\nB\tisa\tC\nA\tisa\tB\n");
  const CliResult r = run_cli("prep --triples " + dir.file("in.tsv").string() +
                                  " --out-triples " + dir.file("out.tsv").string() +
                                  " --out-stats " + dir.file("stats.txt").string(),
                              dir);
  REQUIRE(r.exit_code == 0);
  CHECK(test::read_file(dir.file("out.tsv")) == "A\tisa\tB\nB\tisa\tC\n");
  const auto stats = parse_kv(test::read_file(dir.file("stats.txt")), '\t');
  CHECK(stats.at("facts") == "2");
  CHECK(stats.at("duplicates_dropped") == "1");
  const auto resolved = parse_kv(test::read_file(dir.file("out.tsv.config")), '=');
  CHECK(resolved.at("triples") == dir.file("in.tsv").string());
}

TEST_CASE("prep parses a synthetic release fixture byte-exactly") {
  TempDir dir;
  test::write_file(dir.file("concepts.rrf"),
                   "C01|ENG|P|L1|PF|S1|Y|A1||||SRC|PT|1|one|0|N|256|\n"
                   "C02|ENG|P|L2|PF|S2|Y|A2||||SRC|PT|2|two|0|N|256|\n"
                   "C03|ENG|P|L3|PF|S3|Y|A3||||OTHER|PT|3|three|0|N|256|\n"
                   "C04|ENG|P|L4|PF|S4|Y|A4||||SRC|PT|4|four|0|O|256|\n");
  test::write_file(dir.file("relations.rrf"),
                   "C01|A1|SCUI|RO|C02|A2|SCUI|finding_site_of|R1||SRC|SL|||N|256|\n"
                   "C02|A2|SCUI|RO|C01|A1|SCUI|isa|R2||SRC|SL|||N|256|\n"
                   "C01|A1|SCUI|RO|C04|A4|SCUI|isa|R3||SRC|SL|||N|256|\n");
  test::write_file(dir.file("semantics.rrf"),
                   "C01|T047|B1|Disease or Syndrome|AT1|256|\n"
                   "C02|T121|B2|Pharmacologic Substance|AT2|256|\n");
  test::write_file(dir.file("groups.txt"),
                   "DISO|Disorders|T047|Disease or Syndrome|\n"
                   "CHEM|Chemicals & Drugs|T121|Pharmacologic Substance|\n");

  const CliResult r = run_cli(
      "prep --concepts " + dir.file("concepts.rrf").string() + " --relations " +
          dir.file("relations.rrf").string() + " --semantics " +
          dir.file("semantics.rrf").string() + " --semgroups " + dir.file("groups.txt").string() +
          " --source SRC --out-triples " + dir.file("triples.tsv").string() + " --out-labels " +
          dir.file("labels.tsv").string(),
      dir);
  REQUIRE(r.exit_code == 0);
  // hand-derived: rows relate CUI2 to CUI1, C03/C04 filtered out
  CHECK(test::read_file(dir.file("triples.tsv")) ==
        "C02\tfinding_site_of\tC01\nC01\tisa\tC02\n");
  CHECK(test::read_file(dir.file("labels.tsv")) ==
        "C02\tPharmacologic Substance\tCHEM\nC01\tDisease or Syndrome\tDISO\n");
}

TEST_CASE("split runs are byte-identical per seed and report zero unseen") {
  TempDir dir;
  write_fixture(dir);
  REQUIRE(run_cli(split_args(dir), dir).exit_code == 0);
  const std::string train_a = test::read_file(dir.file("splits/train.tsv"));
  const std::string valid_a = test::read_file(dir.file("splits/valid.tsv"));
  const auto stats = parse_kv(test::read_file(dir.file("splits/stats.txt")), '\t');
  CHECK(stats.at("unseen_valid_entities") == "0");
  CHECK(stats.at("unseen_valid_relations") == "0");
  CHECK(stats.at("unseen_test_entities") == "0");
  CHECK(stats.at("unseen_test_relations") == "0");

  REQUIRE(run_cli(split_args(dir), dir).exit_code == 0);
  CHECK(test::read_file(dir.file("splits/train.tsv")) == train_a);
  CHECK(test::read_file(dir.file("splits/valid.tsv")) == valid_a);
}

TEST_CASE("train rejects an invalid model kind listing the valid ones") {
  TempDir dir;
  write_fixture(dir);
  REQUIRE(run_cli(split_args(dir), dir).exit_code == 0);
  const std::string splits = dir.file("splits").string();
  const CliResult r = run_cli("train --train " + splits + "/train.tsv --valid " + splits +
                                  "/valid.tsv --model tucker --checkpoint " +
                                  dir.file("x.ckpt").string(),
                              dir);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("tucker") != std::string::npos);
  for (const char* kind : {"transe", "distmult", "complex", "simple", "rotate"}) {
    CHECK(r.output.find(kind) != std::string::npos);
  }
}

TEST_CASE("train pipeline: checkpoint, log, reproducibility, resume") {
  TempDir dir;
  write_fixture(dir);
  REQUIRE(run_cli(split_args(dir), dir).exit_code == 0);

  REQUIRE(run_cli(train_args(dir, "a.ckpt"), dir).exit_code == 0);
  REQUIRE(run_cli(train_args(dir, "b.ckpt"), dir).exit_code == 0);
  const std::string bytes_a = test::read_file(dir.file("a.ckpt"));
  CHECK(!bytes_a.empty());
  CHECK(bytes_a == test::read_file(dir.file("b.ckpt")));  // bitwise reproducible

  const std::string log = test::read_file(dir.file("a.ckpt.log"));
  CHECK(log.find("epoch\tmean_loss\tvalid_mrr") == 0);

  // resume continues the epoch numbering past the first run
  const Checkpoint first = load_checkpoint(dir.file("a.ckpt"));
  const CliResult resumed = run_cli(
      train_args(dir, "c.ckpt", " --resume " + dir.file("a.ckpt").string() + " --num-epoch 40"),
      dir);
  REQUIRE(resumed.exit_code == 0);
  const Checkpoint second = load_checkpoint(dir.file("c.ckpt"));
  CHECK(second.epoch >= first.epoch);
  CHECK(second.valid_mrr >= first.valid_mrr);
}

TEST_CASE("train reports numerical failures with exit code 3") {
  TempDir dir;
  write_fixture(dir);
  REQUIRE(run_cli(split_args(dir), dir).exit_code == 0);
  const std::string splits = dir.file("splits").string();
  const CliResult r = run_cli("train --train " + splits + "/train.tsv --valid " + splits +
                                  "/valid.tsv --model distmult --dim 8 --learning-rate 1e18 "
                                  "--num-negative 4 --num-epoch 50 --eval-every 50 --checkpoint " +
                                  dir.file("blow.ckpt").string(),
                              dir);
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("numerical failure") != std::string::npos);
}

TEST_CASE("eval report matches a library-level evaluation exactly") {
  TempDir dir;
  write_fixture(dir);
  REQUIRE(run_cli(split_args(dir), dir).exit_code == 0);
  REQUIRE(run_cli(train_args(dir, "m.ckpt"), dir).exit_code == 0);

  const CliResult r = run_cli("eval --checkpoint " + dir.file("m.ckpt").string() +
                                  dataset_args(dir) + " --target both --out " +
                                  dir.file("rep").string(),
                              dir);
  REQUIRE(r.exit_code == 0);

  // library-level recomputation from the same artifacts
  const Checkpoint ckpt = load_checkpoint(dir.file("m.ckpt"));
  auto train_raw = read_triple_tsv(dir.file("splits/train.tsv"));
  auto valid_raw = read_triple_tsv(dir.file("splits/valid.tsv"));
  auto test_raw = read_triple_tsv(dir.file("splits/test.tsv"));
  std::vector<RawTriple> all = train_raw;
  all.insert(all.end(), valid_raw.begin(), valid_raw.end());
  all.insert(all.end(), test_raw.begin(), test_raw.end());
  const Vocabulary vocab = build_vocabulary(all);
  const TripleStore train_store = encode_triples(train_raw, vocab, Split::train);
  const TripleStore valid_store = encode_triples(valid_raw, vocab, Split::valid);
  const TripleStore test_store = encode_triples(test_raw, vocab, Split::test);
  FilterSet filter;
  filter.add(train_store);
  filter.add(valid_store);
  filter.add(test_store);
  const MetricSummary expected =
      link_prediction(test_store, ckpt.table, ckpt.model, filter, LinkTarget::both).summary();

  const auto summary = parse_kv(test::read_file(dir.file("rep.summary.txt")), '=');
  CHECK(std::stod(summary.at("mrr")) == expected.mrr);
  CHECK(std::stod(summary.at("mq100")) == expected.mq100);
  CHECK(std::stod(summary.at("hits10")) == expected.hits10);
  CHECK(std::stoul(summary.at("queries")) == expected.query_count);
}

TEST_CASE("eval emits relation-prediction and stratified reports") {
  TempDir dir;
  write_fixture(dir);
  REQUIRE(run_cli(split_args(dir), dir).exit_code == 0);
  REQUIRE(run_cli(train_args(dir, "m.ckpt"), dir).exit_code == 0);

  const CliResult r = run_cli("eval --checkpoint " + dir.file("m.ckpt").string() +
                                  dataset_args(dir) + " --target relation --strata categories " +
                                  "--strata-relations isa --labels " +
                                  dir.file("labels.tsv").string() + " --dump-ranks --out " +
                                  dir.file("rel").string(),
                              dir);
  REQUIRE(r.exit_code == 0);
  const std::string metrics = test::read_file(dir.file("rel.metrics.tsv"));
  CHECK(metrics.find("\trelation\tall\t") != std::string::npos);
  CHECK(metrics.find("\tisa\t") != std::string::npos);

  const std::string ranks = test::read_file(dir.file("rel.ranks.tsv"));
  CHECK(ranks.find("head\trelation\ttail\tslot\trank\tpool") == 0);
  CHECK(ranks.find("\trelation\t") != std::string::npos);
}

TEST_CASE("export then probe equals the in-process probe bitwise") {
  TempDir dir;
  write_fixture(dir);
  REQUIRE(run_cli(split_args(dir), dir).exit_code == 0);
  REQUIRE(run_cli(train_args(dir, "m.ckpt"), dir).exit_code == 0);

  REQUIRE(run_cli("export --checkpoint " + dir.file("m.ckpt").string() + dataset_args(dir) +
                      " --format binary --what entities --out " + dir.file("emb.bin").string(),
                  dir)
              .exit_code == 0);
  const CliResult probe_run =
      run_cli("probe --embeddings " + dir.file("emb.bin").string() + " --labels " +
                  dir.file("labels.tsv").string() + " --kind group --seed 3 --out " +
                  dir.file("probe.tsv").string(),
              dir);
  REQUIRE(probe_run.exit_code == 0);

  // in-process equivalent: checkpoint f32 -> features, same labels and seed
  const Checkpoint ckpt = load_checkpoint(dir.file("m.ckpt"));
  const EmbeddingSet set = load_embedding_file(dir.file("emb.bin"));
  const auto label_rows = read_labels_tsv(dir.file("labels.tsv"));
  const EmbeddingSet sets[] = {set};
  const ProbeDataset dataset = build_probe_dataset(sets, label_rows);
  ProbeConfig probe_cfg;
  probe_cfg.seed = derive_seed(3, 0x70726f62);
  const ClassifyResult expected = classify(dataset.per_model[0], dataset.group_ids, probe_cfg);

  const std::string report = test::read_file(dir.file("probe.tsv"));
  char expected_acc[32];
  std::snprintf(expected_acc, sizeof(expected_acc), "%.6f", expected.accuracy);
  CHECK(report.find(expected_acc) != std::string::npos);

  // the exported f32 features equal the checkpoint parameters bitwise
  REQUIRE(set.features.rows == ckpt.table.num_entities);
  bool identical = true;
  for (std::size_t i = 0; i < set.features.data.size(); ++i) {
    identical &= set.features.data[i] == ckpt.table.entities[i];
  }
  CHECK(identical);
}

TEST_CASE("power command writes per-task rows") {
  TempDir dir;
  write_fixture(dir);
  REQUIRE(run_cli(split_args(dir), dir).exit_code == 0);
  REQUIRE(run_cli(train_args(dir, "m.ckpt"), dir).exit_code == 0);
  REQUIRE(run_cli("export --checkpoint " + dir.file("m.ckpt").string() + dataset_args(dir) +
                      " --format binary --out " + dir.file("emb.bin").string(),
                  dir)
              .exit_code == 0);
  test::write_file(dir.file("tasks.tsv"),
                   "c1\tc2\trelated\tGRP0\tGRP1\nc3\tc4\trelated\tGRP0\tGRP1\n");
  const CliResult r = run_cli("power --embeddings " + dir.file("emb.bin").string() +
                                  " --labels " + dir.file("labels.tsv").string() + " --tasks " +
                                  dir.file("tasks.tsv").string() +
                                  " --samples 1000 --seed 2 --out " +
                                  dir.file("power.tsv").string(),
                              dir);
  REQUIRE(r.exit_code == 0);
  const std::string report = test::read_file(dir.file("power.tsv"));
  CHECK(report.find("model\ttask\tpairs\tpower\tthreshold") == 0);
  CHECK(report.find("related|GRP0|GRP1\t2\t") != std::string::npos);
}

TEST_CASE("analyze-relations writes one categorized row per relation") {
  TempDir dir;
  write_fixture(dir);
  REQUIRE(run_cli(split_args(dir), dir).exit_code == 0);
  const CliResult r = run_cli("analyze-relations" + dataset_args(dir) + " --labels " +
                                  dir.file("labels.tsv").string() + " --out " +
                                  dir.file("rels.tsv").string(),
                              dir);
  REQUIRE(r.exit_code == 0);
  const std::string report = test::read_file(dir.file("rels.tsv"));
  CHECK(report.find("isa\t") != std::string::npos);
  CHECK(report.find("inverse_isa\t") != std::string::npos);
  CHECK(report.find("attr\t") != std::string::npos);
  // attr maps concepts (two groups) onto attribute entities (one group)
  CHECK(report.find("attr\tM\t1") != std::string::npos);
}

TEST_CASE("config file drives a run and flags win over it") {
  TempDir dir;
  test::write_file(dir.file("in.tsv"), "A\tisa\tB\n");
  test::write_file(dir.file("run.config"),
                   "triples=" + dir.file("in.tsv").string() +
                       "\nout_triples=" + dir.file("from_cfg.tsv").string() + "\n");
  REQUIRE(run_cli("prep --config " + dir.file("run.config").string(), dir).exit_code == 0);
  CHECK(test::read_file(dir.file("from_cfg.tsv")) == "A\tisa\tB\n");

  // flag overrides the config's output path
  REQUIRE(run_cli("prep --config " + dir.file("run.config").string() + " --out-triples " +
                      dir.file("flag_wins.tsv").string(),
                  dir)
              .exit_code == 0);
  CHECK(test::read_file(dir.file("flag_wins.tsv")) == "A\tisa\tB\n");

  test::write_file(dir.file("bad.config"), "mystery_key=1\n");
  const CliResult bad = run_cli("prep --config " + dir.file("bad.config").string(), dir);
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("mystery_key") != std::string::npos);
}
