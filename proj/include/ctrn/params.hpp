// Copyright 2026 The ctrn authors. Apache 2.0 License.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ctrn/error.hpp"
#include "ctrn/rng.hpp"
#include "ctrn/tape.hpp"
#include "ctrn/tensor.hpp"

namespace ctrn {

enum class ParamKind {
  projection,
  conv_weight,
  conv_bias,
  dense_weight,
  dense_bias,
  softmax_weight,
  softmax_bias,
};

struct ParamEntry {
  std::string name;
  ParamKind kind;
  Node node;
};

// Ordered registry of every trainable tensor. Order is construction order
// and is the contract for optimizer state and checkpoints.
class ParamRegistry {
 public:
  Node add(std::string name, ParamKind kind, Tensor init) {
    for (const ParamEntry& e : entries_) {
      if (e.name == name) throw ConfigError("duplicate parameter: " + name);
    }
    Node n = make_leaf(std::move(init));
    entries_.push_back({std::move(name), kind, n});
    return entries_.back().node;
  }

  const std::vector<ParamEntry>& entries() const { return entries_; }

  Node find(const std::string& name) const {
    for (const ParamEntry& e : entries_) {
      if (e.name == name) return e.node;
    }
    throw ConfigError("unknown parameter: " + name);
  }

  std::size_t total_count() const {
    std::size_t n = 0;
    for (const ParamEntry& e : entries_) n += e.node->value.numel();
    return n;
  }

  void zero_grads() {
    for (ParamEntry& e : entries_) e.node->grad.fill(0.0);
  }

  // Squared L2 norm over all trainable values (Eq-style ||theta||^2).
  double l2_norm_sq() const {
    double acc = 0.0;
    for (const ParamEntry& e : entries_) {
      for (double v : e.node->value.data()) acc += v * v;
    }
    return acc;
  }

  std::vector<Tensor> snapshot_values() const {
    std::vector<Tensor> out;
    out.reserve(entries_.size());
    for (const ParamEntry& e : entries_) out.push_back(e.node->value);
    return out;
  }

  void restore_values(const std::vector<Tensor>& values) {
    if (values.size() != entries_.size()) {
      throw StateError("restore_values: snapshot size mismatch");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      check_same_shape(values[i], entries_[i].node->value, "restore_values");
      entries_[i].node->value = values[i];
    }
  }

 private:
  std::vector<ParamEntry> entries_;
};

// Uniform +-sqrt(6/(fan_in+fan_out)) initialization.
inline Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in,
                             std::size_t fan_out, Rng& rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return Tensor::uniform(std::move(shape), -bound, bound, rng);
}

}  // namespace ctrn
