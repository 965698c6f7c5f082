// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Command-line front door: train, eval, score, params, bench.
// Exit codes: 0 success, 2 configuration/usage, 3 data, 4 checkpoint.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ctrn/ctrn.hpp"

namespace {

using ctrn::KeyValues;
using ctrn::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCheckpoint = 4;

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

RunConfig build_config(const std::string& config_path, const KeyValues& flags) {
  KeyValues file_kv;
  if (!config_path.empty()) {
    file_kv = ctrn::parse_config_file(config_path);
  }
  return RunConfig::merged(file_kv, flags);
}

std::optional<ctrn::LengthFilter> length_filter(const RunConfig& cfg) {
  if (cfg.length_min == 0 && cfg.length_max == 0) return std::nullopt;
  return ctrn::LengthFilter{cfg.length_min,
                            cfg.length_max == 0 ? SIZE_MAX : cfg.length_max};
}

struct LoadedModel {
  RunConfig config;
  ctrn::Vocabulary vocab;
  std::unique_ptr<ctrn::RankingModel> model;
  ctrn::IdfTable idf;
  ctrn::Stopwords stopwords;
};

LoadedModel load_model(const std::string& checkpoint_path) {
  const ctrn::Checkpoint ckpt = ctrn::load_checkpoint(checkpoint_path);
  LoadedModel out;
  out.config.apply(ctrn::parse_config_text(ckpt.config_text));
  out.vocab = ctrn::Vocabulary::from_tokens(ckpt.vocab_tokens);
  ctrn::EmbeddingTable table;
  table.values = ckpt.embedding;
  out.model = std::make_unique<ctrn::RankingModel>(
      out.config.train.model, std::move(table), out.config.train.seed);
  ctrn::restore_params(*out.model, ckpt);
  out.idf.n_docs = ckpt.idf_docs;
  for (const auto& [tok, v] : ckpt.idf_entries) out.idf.idf[tok] = v;
  out.stopwords.insert(ckpt.stopwords.begin(), ckpt.stopwords.end());
  return out;
}

int cmd_train(const RunConfig& cfg) {
  cfg.validate_for_train();

  const auto filter = length_filter(cfg);
  const auto train_set = ctrn::read_tsv(cfg.train_path, filter);
  const auto dev_set = ctrn::read_tsv(cfg.dev_path, filter);
  if (train_set.empty()) {
    throw ctrn::ConfigError("train_path: dataset is empty after filtering");
  }
  if (dev_set.empty()) {
    throw ctrn::ConfigError("dev_path: dataset is empty after filtering");
  }

  std::vector<std::vector<std::string>> texts;
  for (const auto& inst : train_set) {
    texts.push_back(inst.question);
    texts.push_back(inst.answer);
  }
  const auto vocab = ctrn::Vocabulary::build(texts);

  // Without a pretrained file the table is seeded random at pretrained-like
  // scale; the small missing-token law would leave the fused features too
  // weak to train from.
  ctrn::EmbeddingTable table =
      cfg.embeddings_path.empty()
          ? ctrn::random_embeddings(vocab, cfg.train.model.embed_dim,
                                    cfg.train.seed, /*bound=*/1.0)
          : ctrn::load_embeddings(cfg.embeddings_path,
                                  cfg.train.model.embed_dim, vocab,
                                  cfg.train.seed);

  ctrn::IdfTable idf;
  ctrn::Stopwords stopwords;
  if (cfg.train.model.use_overlap) {
    idf = ctrn::compute_idf(train_set);
    if (!cfg.stopwords_path.empty()) {
      stopwords = ctrn::load_stopwords(cfg.stopwords_path);
    }
  }

  ctrn::RankingModel model(cfg.train.model, std::move(table), cfg.train.seed);

  const std::string config_text = cfg.to_text();
  const std::string log_path = cfg.checkpoint_path + ".log";
  std::ofstream log(log_path);
  if (!log) throw ctrn::IoError("cannot write log: " + log_path);
  std::istringstream echo(config_text);
  std::string line;
  while (std::getline(echo, line)) log << "# " << line << '\n';

  ctrn::TrainData data;
  data.train_set = &train_set;
  data.dev_set = &dev_set;
  data.vocab = &vocab;
  data.idf = cfg.train.model.use_overlap ? &idf : nullptr;
  data.stopwords = cfg.train.model.use_overlap ? &stopwords : nullptr;

  const ctrn::TrainResult result = ctrn::train(model, data, cfg.train, &log);

  const ctrn::Checkpoint ckpt =
      ctrn::make_checkpoint(model, config_text, vocab, idf, stopwords);
  ctrn::save_checkpoint(cfg.checkpoint_path, ckpt);

  std::cout << "trained " << result.log.size() << " epochs; best "
            << ctrn::to_string(cfg.train.dev_metric) << "="
            << result.best_dev << " at epoch " << result.best_epoch << '\n'
            << "checkpoint: " << cfg.checkpoint_path << '\n'
            << "log: " << log_path << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& cli_cfg) {
  cli_cfg.validate_for_eval();
  LoadedModel loaded = load_model(cli_cfg.checkpoint_path);
  const auto& mcfg = loaded.model->config();

  const auto test_set = ctrn::read_tsv(cli_cfg.test_path);
  const auto scores = ctrn::score_instances(
      *loaded.model, test_set, loaded.vocab, loaded.config.train.batch_size,
      mcfg.use_overlap ? &loaded.idf : nullptr,
      mcfg.use_overlap ? &loaded.stopwords : nullptr);
  const auto groups = ctrn::group_candidates(test_set, scores);

  char buf[96];
  std::snprintf(buf, sizeof(buf), "P@1=%.4f, MRR=%.4f, MAP=%.4f",
                ctrn::p_at_1(groups), ctrn::mrr(groups),
                ctrn::mean_average_precision(groups));
  std::cout << buf << '\n';

  const std::string run_path =
      cli_cfg.out_path.empty() ? "run.txt" : cli_cfg.out_path;
  std::ofstream run(run_path);
  if (!run) throw ctrn::IoError("cannot write run file: " + run_path);
  ctrn::write_trec_run(run, groups, cli_cfg.run_tag);
  std::cout << "run file: " << run_path << '\n';
  return kExitOk;
}

int cmd_score(const RunConfig& cli_cfg) {
  cli_cfg.validate_for_eval();
  LoadedModel loaded = load_model(cli_cfg.checkpoint_path);
  const auto& mcfg = loaded.model->config();

  const auto test_set = ctrn::read_tsv(cli_cfg.test_path);
  const auto scores = ctrn::score_instances(
      *loaded.model, test_set, loaded.vocab, loaded.config.train.batch_size,
      mcfg.use_overlap ? &loaded.idf : nullptr,
      mcfg.use_overlap ? &loaded.stopwords : nullptr);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!cli_cfg.out_path.empty()) {
    file.open(cli_cfg.out_path);
    if (!file) throw ctrn::IoError("cannot write scores: " + cli_cfg.out_path);
    out = &file;
  }
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", scores[i]);
    *out << test_set[i].query_id << '\t' << buf << '\n';
  }
  return kExitOk;
}

int cmd_params(const std::string& kind_arg, long long m, long long d,
               long long h, long long k) {
  std::vector<ctrn::BenchKind> kinds;
  if (kind_arg == "all") {
    kinds = {ctrn::BenchKind::lstm, ctrn::BenchKind::ap_bilstm,
             ctrn::BenchKind::qrnn, ctrn::BenchKind::ctrn};
  } else {
    kinds = {ctrn::bench_kind_from_string(kind_arg)};
  }
  std::printf("%-10s  %-24s  %s\n", "model", "mem complexity", "params");
  for (ctrn::BenchKind kind : kinds) {
    std::printf("%-10s  %-24s  %lld\n", ctrn::to_string(kind).c_str(),
                ctrn::param_formula(kind).c_str(),
                ctrn::param_count(kind, m, d, h, k));
  }
  return kExitOk;
}

int cmd_bench(const std::string& kinds_arg, const std::string& lengths_arg,
              std::size_t d, std::size_t m, std::size_t pairs,
              std::size_t reps, std::uint64_t seed,
              const std::string& out_path) {
  ctrn::BenchConfig bcfg;
  bcfg.kinds.clear();
  for (const auto& s : split_csv(kinds_arg)) {
    bcfg.kinds.push_back(ctrn::bench_kind_from_string(s));
  }
  bcfg.lengths.clear();
  for (const auto& s : split_csv(lengths_arg)) {
    bcfg.lengths.push_back(ctrn::detail::parse_u64("L", s));
  }
  if (bcfg.kinds.empty() || bcfg.lengths.empty()) {
    throw ctrn::ConfigError("bench: kinds and L must be non-empty");
  }
  bcfg.d = d;
  bcfg.m = m;
  bcfg.pairs = pairs;
  bcfg.reps = reps;
  bcfg.seed = seed;

  const auto samples = ctrn::time_models(bcfg);
  ctrn::write_bench_csv(std::cout, samples);
  if (!out_path.empty()) {
    std::ofstream csv(out_path);
    if (!csv) throw ctrn::IoError("cannot write csv: " + out_path);
    ctrn::write_bench_csv(csv, samples);
  }

  const auto has_kind = [&](ctrn::BenchKind k) {
    for (auto kk : bcfg.kinds) {
      if (kk == k) return true;
    }
    return false;
  };
  if (has_kind(ctrn::BenchKind::qrnn)) {
    for (std::size_t L : bcfg.lengths) {
      const double q = ctrn::median_for(samples, "qrnn", L);
      if (has_kind(ctrn::BenchKind::ctrn)) {
        std::printf("# ctrn/qrnn @ L=%zu: %.2f\n", L,
                    ctrn::median_for(samples, "ctrn", L) / q);
      }
      if (has_kind(ctrn::BenchKind::lstm)) {
        std::printf("# lstm/qrnn @ L=%zu: %.2f\n", L,
                    ctrn::median_for(samples, "lstm", L) / q);
      }
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctrn: cross-temporal recurrent ranking of question-answer pairs"};
  app.require_subcommand(1);

  std::string config_path;
  KeyValues flags;
  std::string flag_seed, flag_out;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--seed", flag_seed, "run seed (overrides config)");
  };
  const auto add_kv = [&](CLI::App* sub, const char* flag, const char* key,
                          const char* help) {
    sub->add_option_function<std::string>(
        flag, [&flags, key](const std::string& v) { flags[key] = v; }, help);
  };

  CLI::App* train = app.add_subcommand("train", "train a model");
  add_common(train);
  train->add_option("--out", flag_out, "checkpoint output path");
  add_kv(train, "--train", "train_path", "training TSV");
  add_kv(train, "--dev", "dev_path", "development TSV");
  add_kv(train, "--embeddings", "embeddings_path", "pretrained embeddings");
  add_kv(train, "--stopwords", "stopwords_path", "stopword list");
  add_kv(train, "--kind", "kind", "cell kind: ctrn or qrnn");
  add_kv(train, "--filters", "filters", "number of filters d");
  add_kv(train, "--epochs", "epochs", "epoch limit");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval);
  eval->add_option("--out", flag_out, "TREC run file path");
  add_kv(eval, "--checkpoint", "checkpoint", "model checkpoint");
  add_kv(eval, "--test", "test_path", "test TSV");
  add_kv(eval, "--run-tag", "run_tag", "run tag for the TREC file");

  CLI::App* score = app.add_subcommand("score", "score pairs with a checkpoint");
  add_common(score);
  score->add_option("--out", flag_out, "scores output path");
  add_kv(score, "--checkpoint", "checkpoint", "model checkpoint");
  add_kv(score, "--input", "test_path", "input TSV");

  CLI::App* params = app.add_subcommand("params", "parameter accounting");
  params->set_help_flag("--help", "print help");  // frees -h for the h dim
  std::string p_kind = "all";
  long long p_m = 300, p_d = 512, p_h = 128, p_k = 2;
  params->add_option("--kind", p_kind, "lstm, ap-bilstm, qrnn, ctrn, or all");
  params->add_option("--m", p_m, "embedding/projection width m");
  params->add_option("--d", p_d, "filters / recurrent width d");
  params->add_option("--h", p_h, "hidden layer size h");
  params->add_option("--k", p_k, "filter width k");

  CLI::App* bench = app.add_subcommand("bench", "runtime benchmark");
  std::string b_kinds = "ctrn,qrnn,lstm";
  std::string b_lengths = "64,128,256";
  std::size_t b_d = 512, b_m = 64, b_pairs = 2, b_reps = 5;
  std::uint64_t b_seed = 42;
  bench->add_option("--kinds", b_kinds, "comma list of kinds");
  bench->add_option("--L", b_lengths, "comma list of sequence lengths");
  bench->add_option("--d", b_d, "number of filters");
  bench->add_option("--m", b_m, "input width");
  bench->add_option("--pairs", b_pairs, "sequence pairs per repetition");
  bench->add_option("--reps", b_reps, "timed repetitions (>= 5)");
  bench->add_option("--seed", b_seed, "input seed");
  bench->add_option("--out", flag_out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!flag_seed.empty()) flags["seed"] = flag_seed;
    if (train->parsed()) {
      if (!flag_out.empty()) flags["checkpoint"] = flag_out;
      return cmd_train(build_config(config_path, flags));
    }
    if (eval->parsed()) {
      if (!flag_out.empty()) flags["out"] = flag_out;
      return cmd_eval(build_config(config_path, flags));
    }
    if (score->parsed()) {
      if (!flag_out.empty()) flags["out"] = flag_out;
      return cmd_score(build_config(config_path, flags));
    }
    if (params->parsed()) {
      return cmd_params(p_kind, p_m, p_d, p_h, p_k);
    }
    if (bench->parsed()) {
      return cmd_bench(b_kinds, b_lengths, b_d, b_m, b_pairs, b_reps, b_seed,
                       flag_out);
    }
    return kExitConfig;
  } catch (const ctrn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ctrn::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const ctrn::ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ctrn::LabelError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ctrn::VocabError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ctrn::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
