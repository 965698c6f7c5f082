// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// The assembled ranking network: shared embedding + projection for both
// sequences, convolved gates from (by default) shared banks, the cell pair,
// masked mean pooling, and the MLP/softmax head. The QRNN variant is the
// same network minus the cross traces; the two variants register exactly
// the same trainable parameters.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ctrn/data.hpp"
#include "ctrn/encoder.hpp"
#include "ctrn/error.hpp"
#include "ctrn/head.hpp"
#include "ctrn/ops.hpp"
#include "ctrn/params.hpp"
#include "ctrn/rng.hpp"
#include "ctrn/tape.hpp"

namespace ctrn {

enum class CellKind { qrnn, ctrn };

inline std::string to_string(CellKind k) {
  return k == CellKind::qrnn ? "qrnn" : "ctrn";
}

inline CellKind cell_kind_from_string(const std::string& s) {
  if (s == "qrnn") return CellKind::qrnn;
  if (s == "ctrn") return CellKind::ctrn;
  throw ConfigError("unknown cell kind: " + s);
}

struct ModelConfig {
  CellKind kind = CellKind::ctrn;
  std::size_t embed_dim = 50;   // n
  std::size_t proj_dim = 32;    // m
  std::size_t filters = 128;    // d
  std::size_t kernel = 2;       // k
  std::size_t hidden = 128;     // h
  std::size_t dense_layers = 1;
  bool conv_bias = true;
  bool shared_banks = true;
  bool use_overlap = false;
  double dropout = 0.5;

  std::size_t head_input_width() const {
    return 2 * filters + (use_overlap ? 4 : 0);
  }
};

// One scoring example: token ids (possibly right-padded with PAD) plus true
// lengths, and the precomputed overlap features when the head uses them.
struct PairInput {
  std::vector<int> q_ids;
  std::vector<int> a_ids;
  std::size_t q_len = 0;
  std::size_t a_len = 0;
  std::array<double, 4> overlap{};
  bool has_overlap = false;

  static PairInput from_tokens(const std::vector<int>& q,
                               const std::vector<int>& a) {
    PairInput p;
    p.q_ids = q;
    p.a_ids = a;
    p.q_len = q.size();
    p.a_len = a.size();
    return p;
  }
};

class RankingModel {
 public:
  RankingModel(ModelConfig cfg, EmbeddingTable table, std::uint64_t init_seed)
      : cfg_(cfg), table_(std::move(table)) {
    if (table_.values.ndim() != 2 || table_.dim() != cfg_.embed_dim) {
      throw ShapeError("embedding table does not match embed_dim");
    }
    if (cfg_.dense_layers < 1 || cfg_.dense_layers > 3) {
      throw ConfigError("dense_layers must lie in [1,3]");
    }
    Rng rng(init_seed);
    const std::size_t n = cfg_.embed_dim;
    const std::size_t m = cfg_.proj_dim;
    projection_ = params_.add("proj", ParamKind::projection,
                              glorot_uniform({n, m}, n, m, rng));
    banks_q_ = add_banks(cfg_.shared_banks ? "" : "q.", rng);
    banks_a_ = cfg_.shared_banks ? banks_q_ : add_banks("a.", rng);

    std::size_t in = cfg_.head_input_width();
    for (std::size_t l = 0; l < cfg_.dense_layers; ++l) {
      const std::string base = "dense" + std::to_string(l);
      MlpLayer layer;
      layer.weights =
          params_.add(base + ".w", ParamKind::dense_weight,
                      glorot_uniform({in, cfg_.hidden}, in, cfg_.hidden, rng));
      layer.bias =
          params_.add(base + ".b", ParamKind::dense_bias, Tensor({cfg_.hidden}));
      mlp_.hidden.push_back(layer);
      in = cfg_.hidden;
    }
    mlp_.softmax_weights =
        params_.add("softmax.w", ParamKind::softmax_weight,
                    glorot_uniform({cfg_.hidden, 2}, cfg_.hidden, 2, rng));
    mlp_.softmax_bias =
        params_.add("softmax.b", ParamKind::softmax_bias, Tensor({2}));
  }

  const ModelConfig& config() const { return cfg_; }
  const EmbeddingTable& table() const { return table_; }
  ParamRegistry& params() { return params_; }
  const ParamRegistry& params() const { return params_; }
  const MlpStack& mlp() const { return mlp_; }

  // Positive-class probability with the forward recorded on `tape`.
  Node score_node(Tape& tape, const PairInput& in, bool training,
                  Rng& dropout_rng) const {
    if (in.q_len < 1 || in.q_len > in.q_ids.size() || in.a_len < 1 ||
        in.a_len > in.a_ids.size()) {
      throw ShapeError("pair lengths must lie in [1, padded length]");
    }
    if (cfg_.use_overlap != in.has_overlap) {
      throw ShapeError("overlap features do not match head configuration");
    }
    Node xq = embed_project(tape, in.q_ids, table_, projection_);
    Node xa = embed_project(tape, in.a_ids, table_, projection_);
    GateBundle gq = compute_gates(tape, xq, banks_q_);
    GateBundle ga = compute_gates(tape, xa, banks_a_);

    Node hq;
    Node ha;
    if (cfg_.kind == CellKind::ctrn) {
      auto [out_q, out_a] = ctrn_pair(tape, gq, ga, in.q_len, in.a_len);
      hq = out_q.fused;
      ha = out_a.fused;
    } else {
      hq = fo_pool(tape, gq.f, gq.o, gq.z, identity_map(in.q_ids.size())).h;
      ha = fo_pool(tape, ga.f, ga.o, ga.z, identity_map(in.a_ids.size())).h;
    }

    PooledPair pooled;
    pooled.q_vec = mean_pool(tape, hq, length_mask(in.q_ids.size(), in.q_len));
    pooled.a_vec = mean_pool(tape, ha, length_mask(in.a_ids.size(), in.a_len));
    if (cfg_.use_overlap) {
      pooled.extra = make_leaf(Tensor::vec(
          {in.overlap[0], in.overlap[1], in.overlap[2], in.overlap[3]}));
    }
    return score_pair(tape, pooled, mlp_, cfg_.dropout, training, dropout_rng);
  }

  // Inference-mode score.
  double score(const PairInput& in) const {
    Tape tape;
    Rng rng(0);
    return score_node(tape, in, /*training=*/false, rng)->value[0];
  }

 private:
  static std::vector<std::uint8_t> length_mask(std::size_t rows,
                                               std::size_t len) {
    std::vector<std::uint8_t> mask(rows, 0);
    for (std::size_t t = 0; t < len; ++t) mask[t] = 1;
    return mask;
  }

  GateBanks add_banks(const std::string& prefix, Rng& rng) {
    const std::size_t k = cfg_.kernel;
    const std::size_t d = cfg_.filters;
    const std::size_t m = cfg_.proj_dim;
    const auto make = [&](const char* gate) {
      ConvBank bank;
      bank.weights = params_.add(prefix + "conv_" + gate + ".w",
                                 ParamKind::conv_weight,
                                 glorot_uniform({k, d, m}, k * m, d, rng));
      if (cfg_.conv_bias) {
        bank.bias = params_.add(prefix + "conv_" + std::string(gate) + ".b",
                                ParamKind::conv_bias, Tensor({d}));
      }
      return bank;
    };
    GateBanks banks;
    banks.z = make("z");
    banks.f = make("f");
    banks.o = make("o");
    return banks;
  }

  ModelConfig cfg_;
  EmbeddingTable table_;
  ParamRegistry params_;
  Node projection_;
  GateBanks banks_q_;
  GateBanks banks_a_;
  MlpStack mlp_;
};

// Builds PairInput rows from a batch, attaching overlap features when the
// model's head consumes them.
inline PairInput pair_from_batch(const SequenceBatch& batch, std::size_t row,
                                 const RankingModel& model,
                                 const std::vector<QAInstance>* instances,
                                 const IdfTable* idf, const Stopwords* stop) {
  PairInput p;
  p.q_ids = batch.q_row(row);
  p.a_ids = batch.a_row(row);
  p.q_len = batch.q_len[row];
  p.a_len = batch.a_len[row];
  if (model.config().use_overlap) {
    if (!instances || !idf) {
      throw ConfigError("overlap head requires instances and an idf table");
    }
    static const Stopwords kEmpty;
    const QAInstance& inst = (*instances)[batch.instance_index[row]];
    p.overlap = overlap_features(inst.question, inst.answer, *idf,
                                 stop ? *stop : kEmpty);
    p.has_overlap = true;
  }
  return p;
}

// Scores `instances` in deterministic order (no shuffling) and returns one
// score per instance, inference mode.
inline std::vector<double> score_instances(
    const RankingModel& model, const std::vector<QAInstance>& instances,
    const Vocabulary& vocab, std::size_t batch_size, const IdfTable* idf,
    const Stopwords* stop) {
  std::vector<double> scores(instances.size(), 0.0);
  const auto batches =
      make_batches(instances, vocab, batch_size, /*seed=*/0, /*shuffle=*/false);
  for (const SequenceBatch& batch : batches) {
    for (std::size_t r = 0; r < batch.size; ++r) {
      const PairInput p =
          pair_from_batch(batch, r, model, &instances, idf, stop);
      scores[batch.instance_index[r]] = model.score(p);
    }
  }
  return scores;
}

}  // namespace ctrn
