// Copyright 2026 The ctrn authors. Apache 2.0 License.

#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>

#include "ctrn/checkpoint.hpp"
#include "ctrn/config.hpp"
#include "ctrn/model.hpp"
#include "ctrn/optim.hpp"
#include "support/gradcheck.hpp"

using namespace ctrn;
using ctrn::test::check_gradients;

namespace {

struct Fixture {
  Vocabulary vocab;
  RankingModel model;

  static Fixture make(ModelConfig cfg, std::uint64_t seed) {
    std::vector<std::vector<std::string>> texts{
        {"alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"}};
    Vocabulary vocab = Vocabulary::build(texts);
    EmbeddingTable table = random_embeddings(vocab, cfg.embed_dim, seed);
    return Fixture{std::move(vocab), RankingModel(cfg, std::move(table), seed)};
  }

  PairInput random_pair(Rng& rng, std::size_t max_len = 6) const {
    const auto draw = [&](std::size_t lo) {
      std::vector<int> ids;
      const std::size_t len = lo + rng.index(max_len - lo + 1);
      for (std::size_t i = 0; i < len; ++i) {
        ids.push_back(2 + static_cast<int>(rng.index(vocab.size() - 2)));
      }
      return ids;
    };
    return PairInput::from_tokens(draw(1), draw(1));
  }
};

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.kind = CellKind::ctrn;
  cfg.embed_dim = 3;
  cfg.proj_dim = 4;
  cfg.filters = 3;
  cfg.kernel = 2;
  cfg.hidden = 5;
  cfg.dense_layers = 2;
  cfg.dropout = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("qrnn and ctrn variants register identical parameter sets") {
  ModelConfig cfg = small_config();
  cfg.kind = CellKind::ctrn;
  auto fx_ctrn = Fixture::make(cfg, 11);
  cfg.kind = CellKind::qrnn;
  auto fx_qrnn = Fixture::make(cfg, 11);

  const auto& a = fx_ctrn.model.params().entries();
  const auto& b = fx_qrnn.model.params().entries();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].name == b[i].name);
    REQUIRE(a[i].node->value.shape() == b[i].node->value.shape());
  }
  REQUIRE(fx_ctrn.model.params().total_count() ==
          fx_qrnn.model.params().total_count());
}

TEST_CASE("full-model gradient check at small dims") {
  for (std::uint64_t seed : {3ull, 9ull}) {
    auto fx = Fixture::make(small_config(), seed);
    Rng rng(seed + 1);
    std::vector<PairInput> batch{fx.random_pair(rng), fx.random_pair(rng)};
    std::vector<int> labels{1, 0};
    const double lambda = 4e-6;

    const auto forward = [&](Tape& tape) {
      Rng drop(0);
      std::vector<Node> terms;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        Node s = fx.model.score_node(tape, batch[i], false, drop);
        terms.push_back(xent(tape, s, labels[i]));
      }
      return sum_scalars(tape, terms);
    };
    const auto objective = [&] {
      Tape tape;
      return forward(tape)->value[0] + lambda * fx.model.params().l2_norm_sq();
    };
    const auto compute = [&] {
      fx.model.params().zero_grads();
      Tape tape;
      tape.backward(forward(tape));
      add_l2_gradient(fx.model.params(), lambda);
    };
    std::vector<Node> nodes;
    for (const ParamEntry& e : fx.model.params().entries()) {
      nodes.push_back(e.node);
    }
    const auto res = check_gradients(compute, objective, nodes);
    INFO("seed " << seed << " worst rel err " << res.max_rel_err);
    REQUIRE(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("gradient check with overlap features attached") {
  ModelConfig cfg = small_config();
  cfg.use_overlap = true;
  auto fx = Fixture::make(cfg, 5);
  Rng rng(6);
  PairInput pair = fx.random_pair(rng);
  pair.has_overlap = true;
  pair.overlap = {0.25, 0.1, 0.3, 0.05};

  const auto forward = [&](Tape& tape) {
    Rng drop(0);
    return xent(tape, fx.model.score_node(tape, pair, false, drop), 1);
  };
  std::vector<Node> nodes;
  for (const ParamEntry& e : fx.model.params().entries()) nodes.push_back(e.node);
  const auto res = check_gradients(
      [&] {
        fx.model.params().zero_grads();
        Tape tape;
        tape.backward(forward(tape));
      },
      [&] {
        Tape tape;
        return forward(tape)->value[0];
      },
      nodes);
  REQUIRE(res.max_rel_err < 1e-4);
}

TEST_CASE("scores are identical alone and inside a padded batch") {
  auto fx = Fixture::make(small_config(), 21);
  Rng rng(22);
  for (int trial = 0; trial < 25; ++trial) {
    PairInput exact = fx.random_pair(rng);
    const double alone = fx.model.score(exact);

    PairInput padded = exact;
    const std::size_t extra_q = 1 + rng.index(4);
    const std::size_t extra_a = 1 + rng.index(4);
    for (std::size_t i = 0; i < extra_q; ++i) padded.q_ids.push_back(kPadId);
    for (std::size_t i = 0; i < extra_a; ++i) padded.a_ids.push_back(kPadId);
    const double batched = fx.model.score(padded);

    REQUIRE(batched == alone);
  }
}

TEST_CASE("scoring is deterministic and tape-free inference is repeatable") {
  auto fx = Fixture::make(small_config(), 31);
  Rng rng(32);
  const PairInput pair = fx.random_pair(rng);
  const double s1 = fx.model.score(pair);
  const double s2 = fx.model.score(pair);
  REQUIRE(s1 == s2);
  REQUIRE(s1 > 0.0);
  REQUIRE(s1 < 1.0);
}

TEST_CASE("checkpoint round-trip reproduces scores bit-exactly") {
  RunConfig run;
  run.train.model = small_config();
  run.train.seed = 17;
  auto fx = Fixture::make(run.train.model, run.train.seed);

  IdfTable idf;
  idf.n_docs = 3;
  idf.idf = {{"alpha", 0.5}};
  Stopwords stop{"the"};
  const Checkpoint out =
      make_checkpoint(fx.model, run.to_text(), fx.vocab, idf, stop);
  const auto path =
      (std::filesystem::temp_directory_path() / "ctrn_model_test.ckpt").string();
  save_checkpoint(path, out);

  const Checkpoint in = load_checkpoint(path);
  REQUIRE(in.config_text == out.config_text);
  REQUIRE(in.idf_docs == 3);
  REQUIRE(in.stopwords == std::vector<std::string>{"the"});

  RunConfig reload;
  reload.apply(parse_config_text(in.config_text));
  const Vocabulary vocab2 = Vocabulary::from_tokens(in.vocab_tokens);
  REQUIRE(vocab2.size() == fx.vocab.size());
  EmbeddingTable table2;
  table2.values = in.embedding;
  RankingModel model2(reload.train.model, std::move(table2), reload.train.seed);
  restore_params(model2, in);

  Rng rng(18);
  for (int trial = 0; trial < 10; ++trial) {
    const PairInput pair = fx.random_pair(rng);
    REQUIRE(model2.score(pair) == fx.model.score(pair));
  }

  SECTION("corrupted magic is a checkpoint error") {
    const auto bad =
        (std::filesystem::temp_directory_path() / "ctrn_bad.ckpt").string();
    std::ofstream f(bad, std::ios::binary);
    f << "NOTACKPTxxxxxxxxxxxx";
    f.close();
    REQUIRE_THROWS_AS(load_checkpoint(bad), CheckpointError);
  }
}
