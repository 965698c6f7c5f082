// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Adam with bias correction, coupled L2 (the 2*lambda*theta term enters the
// gradient, matching the loss definition), the epoch loop with seeded
// shuffling, dev-metric model selection, and patience-based early stopping.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "ctrn/data.hpp"
#include "ctrn/error.hpp"
#include "ctrn/head.hpp"
#include "ctrn/metrics.hpp"
#include "ctrn/model.hpp"
#include "ctrn/params.hpp"

namespace ctrn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-parameter first/second moment estimates, aligned with registry order.
class AdamState {
 public:
  explicit AdamState(const ParamRegistry& params) {
    for (const ParamEntry& e : params.entries()) {
      m_.push_back(e.node->value.zeros_like());
      v_.push_back(e.node->value.zeros_like());
    }
  }

  std::uint64_t steps() const { return t_; }
  const Tensor& first_moment(std::size_t i) const { return m_[i]; }
  const Tensor& second_moment(std::size_t i) const { return v_[i]; }

  // One bias-corrected update from the gradients currently in the registry.
  // A non-finite gradient aborts the step before any parameter changes.
  void step(ParamRegistry& params, const AdamConfig& cfg) {
    const auto& entries = params.entries();
    if (entries.size() != m_.size()) {
      throw StateError("adam: registry size changed under optimizer");
    }
    for (const ParamEntry& e : entries) {
      if (!all_finite(e.node->grad)) {
        throw StateError("adam: non-finite gradient in parameter " + e.name);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < entries.size(); ++p) {
      Tensor& value = entries[p].node->value;
      const Tensor& grad = entries[p].node->grad;
      Tensor& m = m_[p];
      Tensor& v = v_[p];
      for (std::size_t i = 0; i < value.numel(); ++i) {
        const double g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        value[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
      }
    }
  }

 private:
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t t_ = 0;
};

// Adds the coupled L2 gradient 2*lambda*theta.
inline void add_l2_gradient(ParamRegistry& params, double lambda) {
  if (lambda == 0.0) return;
  for (const ParamEntry& e : params.entries()) {
    for (std::size_t i = 0; i < e.node->value.numel(); ++i) {
      e.node->grad[i] += 2.0 * lambda * e.node->value[i];
    }
  }
}

enum class DevMetric { map, mrr, p1 };

inline std::string to_string(DevMetric m) {
  switch (m) {
    case DevMetric::map: return "map";
    case DevMetric::mrr: return "mrr";
    default: return "p1";
  }
}

inline DevMetric dev_metric_from_string(const std::string& s) {
  if (s == "map") return DevMetric::map;
  if (s == "mrr") return DevMetric::mrr;
  if (s == "p1") return DevMetric::p1;
  throw ConfigError("unknown dev metric: " + s);
}

inline double eval_metric(const std::vector<RankingGroup>& groups,
                          DevMetric metric) {
  switch (metric) {
    case DevMetric::map: return mean_average_precision(groups);
    case DevMetric::mrr: return mrr(groups);
    default: return p_at_1(groups);
  }
}

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  double lambda = 4e-6;
  std::size_t epochs = 25;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  DevMetric dev_metric = DevMetric::map;

  // Hyperparameter grids enforced at the CLI boundary. The library itself
  // accepts off-grid values so tests can probe e.g. lambda = 0.
  void validate_grids() const {
    if (model.filters % 128 != 0 || model.filters < 128 ||
        model.filters > 1024) {
      throw ConfigError("filters: must be a multiple of 128 in [128,1024]");
    }
    if (model.dense_layers < 1 || model.dense_layers > 3) {
      throw ConfigError("dense_layers: must lie in [1,3]");
    }
    if (learning_rate != 1e-3 && learning_rate != 1e-4 &&
        learning_rate != 1e-5) {
      throw ConfigError("lr: must be one of 1e-3, 1e-4, 1e-5");
    }
    if (batch_size != 64 && batch_size != 128 && batch_size != 256 &&
        batch_size != 512) {
      throw ConfigError("batch: must be one of 64, 128, 256, 512");
    }
    if (model.dropout != 0.5) throw ConfigError("dropout: must be 0.5");
    if (lambda != 4e-6) throw ConfigError("lambda: must be 4e-6");
    if (patience != 5) throw ConfigError("patience: must be 5");
  }
};

// Stops when the dev metric has failed to improve for `patience` epochs.
struct EarlyStopState {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t epochs_since_improvement = 0;
  std::size_t patience = 5;

  // Returns true when training should halt.
  bool observe(double metric) {
    if (metric > best) {
      best = metric;
      epochs_since_improvement = 0;
      return false;
    }
    ++epochs_since_improvement;
    return epochs_since_improvement >= patience;
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_metric = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  double best_dev = 0.0;
  std::size_t best_epoch = 0;
};

struct TrainData {
  const std::vector<QAInstance>* train_set = nullptr;
  const std::vector<QAInstance>* dev_set = nullptr;
  const Vocabulary* vocab = nullptr;
  const IdfTable* idf = nullptr;
  const Stopwords* stopwords = nullptr;
};

// Runs one gradient step on a batch and returns its data loss.
inline double train_step(RankingModel& model, const SequenceBatch& batch,
                         const std::vector<QAInstance>& instances,
                         const IdfTable* idf, const Stopwords* stop,
                         double lambda, AdamState& adam,
                         const AdamConfig& adam_cfg, Rng& dropout_rng) {
  model.params().zero_grads();
  Tape tape;
  std::vector<Node> terms;
  terms.reserve(batch.size);
  for (std::size_t r = 0; r < batch.size; ++r) {
    const PairInput p = pair_from_batch(batch, r, model, &instances, idf, stop);
    Node s = model.score_node(tape, p, /*training=*/true, dropout_rng);
    terms.push_back(xent(tape, s, batch.labels[r]));
  }
  Node batch_loss = sum_scalars(tape, terms);
  tape.backward(batch_loss);
  add_l2_gradient(model.params(), lambda);
  adam.step(model.params(), adam_cfg);
  return batch_loss->value[0];
}

// Epoch loop: seeded shuffling, one Adam step per batch, dev evaluation and
// best-model selection after every epoch, patience-based early stop. The
// model holds the best parameters when this returns. When `log_stream` is
// given one tab-separated line per epoch is emitted:
// epoch, train_loss, dev_metric, seconds.
inline TrainResult train(RankingModel& model, const TrainData& data,
                         const TrainConfig& cfg,
                         std::ostream* log_stream = nullptr) {
  if (!data.train_set || data.train_set->empty()) {
    throw ConfigError("train: empty training set");
  }
  if (!data.dev_set || data.dev_set->empty()) {
    throw ConfigError("train: empty dev set");
  }
  if (!data.vocab) throw ConfigError("train: missing vocabulary");
  if (cfg.epochs == 0) throw ConfigError("train: epochs must be positive");

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  AdamState adam(model.params());
  Rng session_rng(cfg.seed);
  EarlyStopState stopper;
  stopper.patience = cfg.patience;

  TrainResult result;
  std::vector<Tensor> best_values = model.params().snapshot_values();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t shuffle_seed = session_rng.next_u64();
    const auto batches =
        make_batches(*data.train_set, *data.vocab, cfg.batch_size, shuffle_seed);
    double data_loss_sum = 0.0;
    for (const SequenceBatch& batch : batches) {
      data_loss_sum +=
          train_step(model, batch, *data.train_set, data.idf, data.stopwords,
                     cfg.lambda, adam, adam_cfg, session_rng);
    }
    const double mean_loss =
        data_loss_sum / static_cast<double>(data.train_set->size()) +
        cfg.lambda * model.params().l2_norm_sq();

    const auto dev_scores =
        score_instances(model, *data.dev_set, *data.vocab, cfg.batch_size,
                        data.idf, data.stopwords);
    const auto groups = group_candidates(*data.dev_set, dev_scores);
    const double dev = eval_metric(groups, cfg.dev_metric);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    result.log.push_back({epoch, mean_loss, dev, seconds});
    if (log_stream) {
      char line[160];
      std::snprintf(line, sizeof(line), "%zu\t%.6f\t%.6f\t%.3f\n", epoch,
                    mean_loss, dev, seconds);
      *log_stream << line;
    }

    if (dev > result.best_dev || result.best_epoch == 0) {
      result.best_dev = dev;
      result.best_epoch = epoch;
      best_values = model.params().snapshot_values();
    }
    if (stopper.observe(dev)) break;
  }
  model.params().restore_values(best_values);
  return result;
}

}  // namespace ctrn
