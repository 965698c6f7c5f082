// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Parameter accountant for the model-size comparison (conv/projection
// biases and the embedding are excluded, matching that accounting
// convention), a reference LSTM cell for runtime baselines, and the
// wall-clock harness for forward+backward scaling in L.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "ctrn/encoder.hpp"
#include "ctrn/error.hpp"
#include "ctrn/model.hpp"
#include "ctrn/ops.hpp"
#include "ctrn/params.hpp"
#include "ctrn/rng.hpp"
#include "ctrn/tensor.hpp"

namespace ctrn {

enum class BenchKind { lstm, ap_bilstm, qrnn, ctrn };

inline std::string to_string(BenchKind k) {
  switch (k) {
    case BenchKind::lstm: return "lstm";
    case BenchKind::ap_bilstm: return "ap-bilstm";
    case BenchKind::qrnn: return "qrnn";
    default: return "ctrn";
  }
}

inline BenchKind bench_kind_from_string(const std::string& s) {
  if (s == "lstm") return BenchKind::lstm;
  if (s == "ap-bilstm" || s == "ap_bilstm") return BenchKind::ap_bilstm;
  if (s == "qrnn") return BenchKind::qrnn;
  if (s == "ctrn") return BenchKind::ctrn;
  throw ConfigError("unknown model kind: " + s);
}

inline std::string param_formula(BenchKind kind) {
  switch (kind) {
    case BenchKind::lstm: return "4(md + d^2) + 2dh + h";
    case BenchKind::ap_bilstm: return "4(md + d^2) + 4d^2";
    default: return "3kdm + 2dh + h";
  }
}

// Exact trainable-parameter count per encoder kind. The cross-temporal
// variant shares every weight with the quasi-recurrent one; crossing adds
// connections, not parameters.
inline long long param_count(BenchKind kind, long long m, long long d,
                             long long h, long long k) {
  if (m <= 0 || d <= 0 || h <= 0 || k <= 0) {
    throw ConfigError("param_count: dimensions must be positive");
  }
  switch (kind) {
    case BenchKind::lstm: return 4 * (m * d + d * d) + 2 * d * h + h;
    case BenchKind::ap_bilstm: return 4 * (m * d + d * d) + 4 * d * d;
    case BenchKind::qrnn:
    case BenchKind::ctrn: return 3 * k * d * m + 2 * d * h + h;
  }
  throw ConfigError("param_count: unknown kind");
}

// Total trainable elements in a live model.
inline std::size_t registry_count(const RankingModel& model) {
  return model.params().total_count();
}

// Registry elements under the accounting convention: conv banks plus the
// first (composition) dense layer; projection and softmax head excluded.
// With conv biases disabled this equals param_count for qrnn/ctrn.
inline std::size_t table2_registry_count(const RankingModel& model) {
  std::size_t n = 0;
  for (const ParamEntry& e : model.params().entries()) {
    const bool compose_layer =
        e.name == "dense0.w" || e.name == "dense0.b";
    if (e.kind == ParamKind::conv_weight || compose_layer) {
      n += e.node->value.numel();
    }
  }
  return n;
}

// Reference LSTM used only for runtime comparison and the parameter
// cross-check: four gates from per-step matmuls, no biases. Gate column
// blocks are [input | forget | output | candidate].
class LstmRefCell {
 public:
  LstmRefCell(std::size_t m, std::size_t d, std::uint64_t seed)
      : m_(m), d_(d) {
    Rng rng(seed);
    w_x_ = glorot_uniform({m, 4 * d}, m, 4 * d, rng);
    w_h_ = glorot_uniform({d, 4 * d}, d, 4 * d, rng);
  }

  std::size_t input_dim() const { return m_; }
  std::size_t state_dim() const { return d_; }
  std::size_t param_count() const { return 4 * (m_ * d_ + d_ * d_); }
  Tensor& w_x() { return w_x_; }
  Tensor& w_h() { return w_h_; }

  struct Trace {
    Tensor gates;   // L x 4d, post-activation
    Tensor c;       // L x d
    Tensor h;       // L x d
    Tensor tanh_c;  // L x d
  };

  Trace forward(const Tensor& x) const {
    if (x.ndim() != 2 || x.extent(1) != m_) {
      throw ShapeError("lstm: input must be L x m");
    }
    const std::size_t L = x.extent(0);
    Trace tr{Tensor({L, 4 * d_}), Tensor({L, d_}), Tensor({L, d_}),
             Tensor({L, d_})};
    std::vector<double> pre(4 * d_);
    for (std::size_t t = 0; t < L; ++t) {
      std::fill(pre.begin(), pre.end(), 0.0);
      for (std::size_t i = 0; i < m_; ++i) {
        const double xi = x(t, i);
        for (std::size_t j = 0; j < 4 * d_; ++j) pre[j] += xi * w_x_(i, j);
      }
      if (t > 0) {
        for (std::size_t i = 0; i < d_; ++i) {
          const double hi = tr.h(t - 1, i);
          for (std::size_t j = 0; j < 4 * d_; ++j) pre[j] += hi * w_h_(i, j);
        }
      }
      for (std::size_t j = 0; j < d_; ++j) {
        const double gi = sigmoid_scalar(pre[j]);
        const double gf = sigmoid_scalar(pre[d_ + j]);
        const double go = sigmoid_scalar(pre[2 * d_ + j]);
        const double gg = tanh_scalar(pre[3 * d_ + j]);
        tr.gates(t, j) = gi;
        tr.gates(t, d_ + j) = gf;
        tr.gates(t, 2 * d_ + j) = go;
        tr.gates(t, 3 * d_ + j) = gg;
        const double prev = t > 0 ? tr.c(t - 1, j) : 0.0;
        tr.c(t, j) = gf * prev + gi * gg;
        tr.tanh_c(t, j) = tanh_scalar(tr.c(t, j));
        tr.h(t, j) = go * tr.tanh_c(t, j);
      }
    }
    return tr;
  }

  // Backpropagation through time given upstream dH; accumulates weight
  // gradients and optionally the input gradient.
  void backward(const Tensor& x, const Trace& tr, const Tensor& dh,
                Tensor& dwx, Tensor& dwh, Tensor* dx) const {
    const std::size_t L = x.extent(0);
    std::vector<double> dc_carry(d_, 0.0);
    std::vector<double> dh_carry(d_, 0.0);
    std::vector<double> dpre(4 * d_);
    for (std::size_t t = L; t-- > 0;) {
      for (std::size_t j = 0; j < d_; ++j) {
        const double gi = tr.gates(t, j);
        const double gf = tr.gates(t, d_ + j);
        const double go = tr.gates(t, 2 * d_ + j);
        const double gg = tr.gates(t, 3 * d_ + j);
        const double tc = tr.tanh_c(t, j);
        const double dht = dh(t, j) + dh_carry[j];
        const double dc = dht * go * (1.0 - tc * tc) + dc_carry[j];
        const double prev = t > 0 ? tr.c(t - 1, j) : 0.0;
        dpre[j] = dc * gg * gi * (1.0 - gi);
        dpre[d_ + j] = dc * prev * gf * (1.0 - gf);
        dpre[2 * d_ + j] = dht * tc * go * (1.0 - go);
        dpre[3 * d_ + j] = dc * gi * (1.0 - gg * gg);
        dc_carry[j] = dc * gf;
      }
      for (std::size_t i = 0; i < m_; ++i) {
        const double xi = x(t, i);
        double acc = 0.0;
        for (std::size_t j = 0; j < 4 * d_; ++j) {
          dwx(i, j) += xi * dpre[j];
          acc += w_x_(i, j) * dpre[j];
        }
        if (dx) (*dx)(t, i) += acc;
      }
      std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
      if (t > 0) {
        for (std::size_t i = 0; i < d_; ++i) {
          const double hi = tr.h(t - 1, i);
          double acc = 0.0;
          for (std::size_t j = 0; j < 4 * d_; ++j) {
            dwh(i, j) += hi * dpre[j];
            acc += w_h_(i, j) * dpre[j];
          }
          dh_carry[i] = acc;
        }
      }
    }
  }

 private:
  std::size_t m_;
  std::size_t d_;
  Tensor w_x_;
  Tensor w_h_;
};

struct BenchConfig {
  std::vector<BenchKind> kinds{BenchKind::ctrn, BenchKind::qrnn,
                               BenchKind::lstm};
  std::vector<std::size_t> lengths{64, 128, 256};
  std::size_t d = 512;
  std::size_t m = 64;
  std::size_t k = 2;
  std::size_t pairs = 2;  // sequence pairs per repetition
  std::size_t reps = 5;
  std::size_t warmup = 2;  // cold-start reps excluded from the median
  std::uint64_t seed = 42;
};

struct RuntimeSample {
  std::string kind;
  std::size_t L = 0;
  std::size_t d = 0;
  double median_ms = 0.0;
  std::size_t reps = 0;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct BenchBanks {
  ParamRegistry registry;
  GateBanks banks;
};

inline BenchBanks make_bench_banks(std::size_t k, std::size_t d, std::size_t m,
                                   std::uint64_t seed) {
  BenchBanks b;
  Rng rng(seed);
  const auto make = [&](const char* gate) {
    ConvBank bank;
    bank.weights = b.registry.add(std::string("conv_") + gate + ".w",
                                  ParamKind::conv_weight,
                                  glorot_uniform({k, d, m}, k * m, d, rng));
    return bank;
  };
  b.banks.z = make("z");
  b.banks.f = make("f");
  b.banks.o = make("o");
  return b;
}

// One forward+backward pass over all pairs for the quasi-recurrent kinds.
inline void run_gated_rep(BenchBanks& b, const std::vector<Tensor>& inputs,
                          bool crossed) {
  b.registry.zero_grads();
  for (std::size_t p = 0; p + 1 < inputs.size(); p += 2) {
    Tape tape;
    Node xq = make_leaf(inputs[p]);
    Node xa = make_leaf(inputs[p + 1]);
    GateBundle gq = compute_gates(tape, xq, b.banks);
    GateBundle ga = compute_gates(tape, xa, b.banks);
    const std::size_t lq = inputs[p].extent(0);
    const std::size_t la = inputs[p + 1].extent(0);
    Node seed;
    if (crossed) {
      auto [oq, oa] = ctrn_pair(tape, gq, ga, lq, la);
      seed = sum_scalars(tape, {sum_all(tape, oq.fused), sum_all(tape, oa.fused)});
    } else {
      CellNodes cq = fo_pool(tape, gq.f, gq.o, gq.z, identity_map(lq));
      CellNodes ca = fo_pool(tape, ga.f, ga.o, ga.z, identity_map(la));
      seed = sum_scalars(tape, {sum_all(tape, cq.h), sum_all(tape, ca.h)});
    }
    tape.backward(seed);
  }
}

inline void run_lstm_rep(LstmRefCell& cell, const std::vector<Tensor>& inputs,
                         Tensor& dwx, Tensor& dwh) {
  dwx.fill(0.0);
  dwh.fill(0.0);
  for (const Tensor& x : inputs) {
    const auto tr = cell.forward(x);
    Tensor dh = Tensor::filled({x.extent(0), cell.state_dim()}, 1.0);
    cell.backward(x, tr, dh, dwx, dwh, nullptr);
  }
}

}  // namespace detail

// Medians of forward+backward wall time per repetition (all pairs), after
// warm-up. Inputs are regenerated per (kind, L) from the same seed so every
// kind sees identical data. A short busy spin up front lets the CPU clock
// settle before the first cell is timed.
inline std::vector<RuntimeSample> time_models(const BenchConfig& cfg) {
  if (cfg.reps < 5) throw ConfigError("bench: reps must be >= 5");
  {
    volatile double sink = 0.0;
    const auto spin_until =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
    while (std::chrono::steady_clock::now() < spin_until) {
      for (int i = 0; i < 4096; ++i) sink = sink + 1e-9 * i;
    }
  }
  std::vector<RuntimeSample> samples;
  for (BenchKind kind : cfg.kinds) {
    if (kind == BenchKind::ap_bilstm) {
      throw ConfigError("bench: ap-bilstm has no runtime implementation");
    }
    // One parameter set per kind, shared by every L, and repetitions
    // interleaved across the lengths: allocation/alignment luck and clock
    // drift then hit all lengths alike instead of skewing the ratios.
    std::vector<std::vector<Tensor>> inputs_by_len;
    for (std::size_t L : cfg.lengths) {
      Rng rng(cfg.seed);
      std::vector<Tensor> inputs;
      for (std::size_t p = 0; p < 2 * cfg.pairs; ++p) {
        inputs.push_back(Tensor::uniform({L, cfg.m}, -1.0, 1.0, rng));
      }
      inputs_by_len.push_back(std::move(inputs));
    }
    std::vector<std::vector<double>> times(cfg.lengths.size());
    if (kind == BenchKind::lstm) {
      LstmRefCell cell(cfg.m, cfg.d, cfg.seed + 1);
      Tensor dwx({cfg.m, 4 * cfg.d});
      Tensor dwh({cfg.d, 4 * cfg.d});
      for (std::size_t r = 0; r < cfg.warmup + cfg.reps; ++r) {
        for (std::size_t li = 0; li < cfg.lengths.size(); ++li) {
          const auto t0 = std::chrono::steady_clock::now();
          detail::run_lstm_rep(cell, inputs_by_len[li], dwx, dwh);
          const double ms =
              std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
          if (r >= cfg.warmup) times[li].push_back(ms);
        }
      }
    } else {
      auto b = detail::make_bench_banks(cfg.k, cfg.d, cfg.m, cfg.seed + 1);
      const bool crossed = kind == BenchKind::ctrn;
      for (std::size_t r = 0; r < cfg.warmup + cfg.reps; ++r) {
        for (std::size_t li = 0; li < cfg.lengths.size(); ++li) {
          const auto t0 = std::chrono::steady_clock::now();
          detail::run_gated_rep(b, inputs_by_len[li], crossed);
          const double ms =
              std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
          if (r >= cfg.warmup) times[li].push_back(ms);
        }
      }
    }
    for (std::size_t li = 0; li < cfg.lengths.size(); ++li) {
      samples.push_back({to_string(kind), cfg.lengths[li], cfg.d,
                         detail::median(times[li]), cfg.reps});
    }
  }
  return samples;
}

inline void write_bench_csv(std::ostream& out,
                            const std::vector<RuntimeSample>& samples) {
  out << "kind,L,d,median_ms\n";
  for (const RuntimeSample& s : samples) {
    out << s.kind << ',' << s.L << ',' << s.d << ',' << std::fixed
        << std::setprecision(3) << s.median_ms << '\n';
  }
}

inline double median_for(const std::vector<RuntimeSample>& samples,
                         const std::string& kind, std::size_t L) {
  for (const RuntimeSample& s : samples) {
    if (s.kind == kind && s.L == L) return s.median_ms;
  }
  throw ConfigError("bench: no sample for " + kind + " at L=" +
                    std::to_string(L));
}

}  // namespace ctrn
