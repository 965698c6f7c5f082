// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// End-to-end checks of the command-line tool: exit-code contract, config
// precedence, reproducibility, and the eval/score flows.

#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctrn/config.hpp"
#include "ctrn/data.hpp"

using namespace ctrn;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CTRN_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult res;
  char buf[4096];
  while (fgets(buf, sizeof(buf), pipe)) res.output += buf;
  const int status = pclose(pipe);
  res.exit_code = WEXITSTATUS(status);
  return res;
}

std::filesystem::path tmp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "ctrn_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string write_tsv(const std::string& name,
                      const std::vector<QAInstance>& insts) {
  const auto path = tmp_dir() / name;
  std::ofstream out(path);
  for (const auto& inst : insts) {
    out << inst.query_id << '\t' << inst.label << '\t' << join(inst.question)
        << '\t' << join(inst.answer) << '\n';
  }
  return path.string();
}

std::string write_file(const std::string& name, const std::string& content) {
  const auto path = tmp_dir() / name;
  std::ofstream out(path);
  out << content;
  return path.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Log lines minus the wall-time column (and any '#' header verbatim).
std::string log_without_seconds(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      out << line << '\n';
      continue;
    }
    const std::size_t last_tab = line.rfind('\t');
    out << line.substr(0, last_tab) << '\n';
  }
  return out.str();
}

struct Corpus {
  std::string train_tsv;
  std::string dev_tsv;

  static Corpus make() {
    const auto corpus = synthetic_corpus(12, 4, 5);
    std::vector<QAInstance> train_set, dev_set;
    for (const auto& inst : corpus) {
      const std::size_t q = std::stoul(inst.query_id.substr(1));
      (q >= 9 ? dev_set : train_set).push_back(inst);
    }
    Corpus c;
    c.train_tsv = write_tsv("train.tsv", train_set);
    c.dev_tsv = write_tsv("dev.tsv", dev_set);
    return c;
  }
};

const char* kSmallModelCfg =
    "filters = 128\n"
    "embed_dim = 12\n"
    "proj_dim = 8\n"
    "hidden = 16\n"
    "epochs = 1\n"
    "batch = 64\n";

}  // namespace

TEST_CASE("params subcommand prints the accounting table") {
  const auto res =
      run_cli("params --kind qrnn --m 300 --d 512 --h 128 --k 2");
  REQUIRE(res.exit_code == 0);
  REQUIRE(res.output.find("1052800") != std::string::npos);

  const auto ctrn_res =
      run_cli("params --kind ctrn --m 300 --d 512 --h 128 --k 2");
  REQUIRE(ctrn_res.exit_code == 0);
  REQUIRE(ctrn_res.output.find("1052800") != std::string::npos);

  const auto all = run_cli("params");
  REQUIRE(all.exit_code == 0);
  REQUIRE(all.output.find("1794176") != std::string::npos);

  const auto bad = run_cli("params --kind transformer");
  REQUIRE(bad.exit_code == 2);
}

TEST_CASE("missing train path exits 2 naming the key") {
  const auto res = run_cli("train");
  REQUIRE(res.exit_code == 2);
  REQUIRE(res.output.find("train_path") != std::string::npos);
}

TEST_CASE("malformed data exits 3") {
  const Corpus corpus = Corpus::make();
  const auto bad_tsv = write_file("bad.tsv", "q1\tnot-enough-fields\n");
  const auto cfg = write_file("cfg_bad_data.cfg", kSmallModelCfg);
  const auto res =
      run_cli("train --config " + cfg + " --train " + bad_tsv + " --dev " +
              corpus.dev_tsv + " --out " + (tmp_dir() / "x.ckpt").string());
  REQUIRE(res.exit_code == 3);
}

TEST_CASE("train, reproduce, eval, score round-trip") {
  const Corpus corpus = Corpus::make();
  const auto cfg_path = write_file(
      "cfg_train.cfg", std::string(kSmallModelCfg) + "seed = 5\n");
  const auto ckpt_a = (tmp_dir() / "a.ckpt").string();
  const auto ckpt_b = (tmp_dir() / "b.ckpt").string();

  const std::string common = std::string("train --config ") + cfg_path +
                             " --train " + corpus.train_tsv + " --dev " +
                             corpus.dev_tsv + " --seed 7 --out ";
  const auto run_a = run_cli(common + ckpt_a);
  INFO(run_a.output);
  REQUIRE(run_a.exit_code == 0);
  REQUIRE(std::filesystem::exists(ckpt_a));

  SECTION("identical seeds reproduce checkpoint and log byte-for-byte") {
    const auto run_b = run_cli(common + ckpt_b);
    REQUIRE(run_b.exit_code == 0);
    REQUIRE(read_file(ckpt_a) == read_file(ckpt_b));
    REQUIRE(log_without_seconds(read_file(ckpt_a + ".log")) ==
            log_without_seconds(read_file(ckpt_b + ".log")));
  }

  SECTION("flag overrides file: log header echoes the effective seed") {
    const std::string header = read_file(ckpt_a + ".log");
    REQUIRE(header.find("# seed = 7") != std::string::npos);

    // File value applies when no flag is given.
    const auto ckpt_c = (tmp_dir() / "c.ckpt").string();
    const auto run_c = run_cli(std::string("train --config ") + cfg_path +
                               " --train " + corpus.train_tsv + " --dev " +
                               corpus.dev_tsv + " --out " + ckpt_c);
    REQUIRE(run_c.exit_code == 0);
    REQUIRE(read_file(ckpt_c + ".log").find("# seed = 5") !=
            std::string::npos);

    // Default applies when neither file nor flag sets the key.
    const auto cfg_noseed = write_file("cfg_noseed.cfg", kSmallModelCfg);
    const auto ckpt_d = (tmp_dir() / "d.ckpt").string();
    const auto run_d = run_cli(std::string("train --config ") + cfg_noseed +
                               " --train " + corpus.train_tsv + " --dev " +
                               corpus.dev_tsv + " --out " + ckpt_d);
    REQUIRE(run_d.exit_code == 0);
    REQUIRE(read_file(ckpt_d + ".log").find("# seed = 1") !=
            std::string::npos);
  }

  SECTION("eval prints metrics and writes a complete run file") {
    const auto run_path = (tmp_dir() / "run.txt").string();
    const auto res = run_cli("eval --checkpoint " + ckpt_a + " --test " +
                             corpus.dev_tsv + " --out " + run_path);
    INFO(res.output);
    REQUIRE(res.exit_code == 0);
    REQUIRE(res.output.find("P@1=") != std::string::npos);
    REQUIRE(res.output.find("MRR=") != std::string::npos);
    REQUIRE(res.output.find("MAP=") != std::string::npos);

    const auto dev_insts = read_tsv(corpus.dev_tsv);
    std::istringstream run_lines(read_file(run_path));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(run_lines, line)) ++lines;
    REQUIRE(lines == dev_insts.size());

    // Rerunning is idempotent: identical stdout and run file bytes.
    const auto run_path2 = (tmp_dir() / "run2.txt").string();
    const auto res2 = run_cli("eval --checkpoint " + ckpt_a + " --test " +
                              corpus.dev_tsv + " --out " + run_path2);
    REQUIRE(res2.exit_code == 0);
    REQUIRE(read_file(run_path2) == read_file(run_path));
  }

  SECTION("score emits one line per input pair") {
    const auto scores_path = (tmp_dir() / "scores.tsv").string();
    const auto res = run_cli("score --checkpoint " + ckpt_a + " --input " +
                             corpus.dev_tsv + " --out " + scores_path);
    REQUIRE(res.exit_code == 0);
    const auto dev_insts = read_tsv(corpus.dev_tsv);
    std::istringstream score_lines(read_file(scores_path));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(score_lines, line)) {
      ++lines;
      REQUIRE(line.find('\t') != std::string::npos);
    }
    REQUIRE(lines == dev_insts.size());
  }

  SECTION("corrupt checkpoint exits 4") {
    const auto broken = write_file("broken.ckpt", "this is not a checkpoint");
    const auto res =
        run_cli("eval --checkpoint " + broken + " --test " + corpus.dev_tsv);
    REQUIRE(res.exit_code == 4);
  }
}

TEST_CASE("off-grid hyperparameters are rejected at the CLI boundary") {
  const Corpus corpus = Corpus::make();
  const auto cfg = write_file(
      "cfg_offgrid.cfg", std::string(kSmallModelCfg) + "lr = 0.5\n");
  const auto res =
      run_cli("train --config " + cfg + " --train " + corpus.train_tsv +
              " --dev " + corpus.dev_tsv + " --out " +
              (tmp_dir() / "off.ckpt").string());
  REQUIRE(res.exit_code == 2);
  REQUIRE(res.output.find("lr") != std::string::npos);
}

TEST_CASE("bench subcommand emits CSV rows per kind and length") {
  const auto csv_path = (tmp_dir() / "bench.csv").string();
  const auto res = run_cli(
      "bench --kinds qrnn,ctrn --L 4,8 --d 8 --m 4 --pairs 1 --reps 5 --out " +
      csv_path);
  INFO(res.output);
  REQUIRE(res.exit_code == 0);
  std::istringstream lines(read_file(csv_path));
  std::string line;
  std::getline(lines, line);
  REQUIRE(line == "kind,L,d,median_ms");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  REQUIRE(rows == 4);
  REQUIRE(res.output.find("ctrn/qrnn") != std::string::npos);
}

TEST_CASE("config text round-trips through parse and apply") {
  RunConfig cfg;
  cfg.train.model.kind = CellKind::qrnn;
  cfg.train.model.filters = 256;
  cfg.train.model.use_overlap = true;
  cfg.train.seed = 99;
  cfg.train.dev_metric = DevMetric::mrr;
  RunConfig reparsed;
  reparsed.apply(parse_config_text(cfg.to_text()));
  REQUIRE(reparsed.train.model.kind == CellKind::qrnn);
  REQUIRE(reparsed.train.model.filters == 256);
  REQUIRE(reparsed.train.model.use_overlap);
  REQUIRE(reparsed.train.seed == 99);
  REQUIRE(reparsed.train.dev_metric == DevMetric::mrr);
  REQUIRE(reparsed.to_text() == cfg.to_text());

  RunConfig bad;
  REQUIRE_THROWS_AS(bad.apply(parse_config_text("nonsense_key = 1")),
                    ConfigError);
}
