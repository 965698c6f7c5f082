// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Scoring head: masked temporal mean pooling (ops.hpp), optional overlap
// features, a 1-3 layer MLP with tanh hidden units and inverted dropout on
// each dense layer's input, a 2-class softmax (positive class is index 0),
// and the regularized cross-entropy loss.

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "ctrn/data.hpp"
#include "ctrn/error.hpp"
#include "ctrn/ops.hpp"
#include "ctrn/tape.hpp"

namespace ctrn {

struct MlpLayer {
  Node weights;  // in x out
  Node bias;     // out
};

struct MlpStack {
  std::vector<MlpLayer> hidden;  // 1..3 layers
  Node softmax_weights;          // h x 2
  Node softmax_bias;             // 2
};

// Pooled representations of one pair, plus the optional overlap features.
struct PooledPair {
  Node q_vec;
  Node a_vec;
  Node extra;  // rank-1 leaf of 4 features, or null
};

// Concatenates [q; a; extra?] and runs the MLP + softmax. Returns the
// positive-class probability as a scalar node.
inline Node score_pair(Tape& tape, const PooledPair& pair, const MlpStack& mlp,
                       double dropout_rate, bool training, Rng& rng) {
  if (mlp.hidden.empty() || mlp.hidden.size() > 3) {
    throw ConfigError("mlp must have 1..3 dense layers");
  }
  std::vector<Node> parts{pair.q_vec, pair.a_vec};
  if (pair.extra) parts.push_back(pair.extra);
  Node x = concat_op(tape, parts);
  for (const MlpLayer& layer : mlp.hidden) {
    x = dropout_op(tape, x, dropout_rate, training, rng);
    x = tanh_op(tape, dense(tape, x, layer.weights, layer.bias));
  }
  Node logits = dense(tape, x, mlp.softmax_weights, mlp.softmax_bias);
  Node probs = softmax_op(tape, logits);
  return pick(tape, probs, 0);
}

struct LossReport {
  double data_loss = 0.0;
  double reg_loss = 0.0;
  double total = 0.0;
};

// Plain-value cross-entropy over a batch of scores, with the L2 term
// lambda * ||theta||^2 supplied by the caller (embedding excluded, it is
// fixed). Scores are clipped to [1e-12, 1-1e-12] before the log.
inline LossReport loss(const std::vector<double>& scores,
                       const std::vector<int>& labels, double lambda,
                       double l2_norm_sq) {
  if (scores.size() != labels.size()) {
    throw ShapeError("loss: score/label count mismatch");
  }
  LossReport report;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw LabelError("loss: label must be 0 or 1");
    }
    const double s =
        std::min(std::max(scores[i], kScoreClip), 1.0 - kScoreClip);
    report.data_loss -= labels[i] == 1 ? std::log(s) : std::log(1.0 - s);
  }
  report.reg_loss = lambda * l2_norm_sq;
  report.total = report.data_loss + report.reg_loss;
  return report;
}

// Overlap ratio |q & a| / (|set q| + |set a|), its idf-weighted analogue,
// and both again with stopwords removed. Empty inputs yield all zeros.
inline std::array<double, 4> overlap_features(
    const std::vector<std::string>& q_tokens,
    const std::vector<std::string>& a_tokens, const IdfTable& idf,
    const Stopwords& stopwords) {
  const auto compute = [&](bool drop_stop) -> std::array<double, 2> {
    std::unordered_set<std::string> qs;
    std::unordered_set<std::string> as;
    for (const auto& t : q_tokens) {
      if (!drop_stop || !stopwords.count(t)) qs.insert(t);
    }
    for (const auto& t : a_tokens) {
      if (!drop_stop || !stopwords.count(t)) as.insert(t);
    }
    if (qs.empty() || as.empty()) return {0.0, 0.0};
    double inter = 0.0;
    double inter_idf = 0.0;
    double q_idf = 0.0;
    double a_idf = 0.0;
    for (const auto& t : qs) {
      q_idf += idf.value(t);
      if (as.count(t)) {
        inter += 1.0;
        inter_idf += idf.value(t);
      }
    }
    for (const auto& t : as) a_idf += idf.value(t);
    const double denom = static_cast<double>(qs.size() + as.size());
    const double idf_denom = q_idf + a_idf;
    return {inter / denom, idf_denom > 0.0 ? inter_idf / idf_denom : 0.0};
  };
  const auto plain = compute(false);
  const auto filtered = compute(true);
  return {plain[0], plain[1], filtered[0], filtered[1]};
}

}  // namespace ctrn
