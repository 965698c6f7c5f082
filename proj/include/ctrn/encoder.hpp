// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Embedding + projection, the convolved gate computation, fo-pooling, and
// the cross-temporal cell pair: each sequence is pooled once under its own
// gates and once under its partner's gates (indexed through the aligned
// step map), and the two hidden traces are fused by elementwise product.

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ctrn/error.hpp"
#include "ctrn/ops.hpp"
#include "ctrn/rng.hpp"
#include "ctrn/tape.hpp"
#include "ctrn/tensor.hpp"

namespace ctrn {

inline constexpr int kPadId = 0;
inline constexpr int kOovId = 1;

// Fixed (non-trainable) token vectors. Row 0 is PAD and stays all-zero.
struct EmbeddingTable {
  Tensor values;  // vocab_size x n

  std::size_t vocab_size() const { return values.extent(0); }
  std::size_t dim() const { return values.extent(1); }
};

// Token ids -> fixed embedding rows -> trainable n x m projection. The
// projection has no bias, so PAD rows map to zero.
inline Node embed_project(Tape& tape, const std::vector<int>& ids,
                          const EmbeddingTable& table, const Node& projection) {
  if (ids.empty()) throw ShapeError("embed_project: empty sequence");
  const Tensor& tv = table.values;
  const Tensor& pv = projection->value;
  if (pv.ndim() != 2 || pv.extent(0) != table.dim()) {
    throw ShapeError("embed_project: projection rows must equal embedding dim");
  }
  const std::size_t L = ids.size();
  const std::size_t n = table.dim();
  const std::size_t m = pv.extent(1);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.vocab_size()) {
      throw VocabError("embed_project: token id out of range");
    }
  }
  Tensor out({L, m});
  for (std::size_t t = 0; t < L; ++t) {
    const std::size_t row = static_cast<std::size_t>(ids[t]);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = tv(row, i);
      if (e == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        out(t, j) += e * pv(i, j);
      }
    }
  }
  Node y = tape.output(std::move(out));
  std::vector<int> ids_copy = ids;
  const Tensor* table_values = &table.values;
  tape.push([ids_copy, table_values, projection, y, n, m] {
    for (std::size_t t = 0; t < ids_copy.size(); ++t) {
      const std::size_t row = static_cast<std::size_t>(ids_copy[t]);
      for (std::size_t i = 0; i < n; ++i) {
        const double e = (*table_values)(row, i);
        if (e == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) {
          projection->grad(i, j) += e * y->grad(t, j);
        }
      }
    }
  });
  return y;
}

struct GateBanks {
  ConvBank z;
  ConvBank f;
  ConvBank o;
};

// Convolved gate tensors for one sequence: Z in (-1,1), F and O in (0,1).
struct GateBundle {
  Node z;
  Node f;
  Node o;
};

inline GateBundle compute_gates(Tape& tape, const Node& x,
                                const GateBanks& banks) {
  GateBundle g;
  g.z = tanh_op(tape, conv1d(tape, x, banks.z));
  g.f = sigmoid_op(tape, conv1d(tape, x, banks.f));
  g.o = sigmoid_op(tape, conv1d(tape, x, banks.o));
  return g;
}

// Aligned partner step for cross-applied gates, 1-based on both sides.
// When the partner is the longer side the ratio formula t * ceil(Lp/Ls) is
// used literally (clamped at the end); when the partner is shorter the map
// is the proportional down-scaling ceil(t * Lp / Ls). Result is always a
// valid partner step.
inline std::size_t align_step(std::size_t t, std::size_t len_self,
                              std::size_t len_partner) {
  if (len_self == 0 || len_partner == 0) {
    throw IndexError("align_step: lengths must be positive");
  }
  if (t < 1 || t > len_self) {
    throw IndexError("align_step: step out of range");
  }
  std::size_t mapped;
  if (len_self <= len_partner) {
    const std::size_t ratio = (len_partner + len_self - 1) / len_self;
    mapped = t * ratio;
  } else {
    mapped = (t * len_partner + len_self - 1) / len_self;
  }
  return std::min(mapped, len_partner);
}

// 0-based gate-row map for a trace of `rows` steps (rows may exceed the true
// length when the sequence is padded; padded steps clamp to the partner's
// last real row and are excluded from pooling by the mask).
inline std::vector<std::size_t> align_map(std::size_t rows, std::size_t len_self,
                                          std::size_t len_partner) {
  std::vector<std::size_t> idx(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + 1;
    idx[r] = t <= len_self ? align_step(t, len_self, len_partner) - 1
                           : len_partner - 1;
  }
  return idx;
}

// One sequence's cell output: the trace under its own gates, the trace under
// the partner's gates, and their elementwise product.
struct CtrnOutput {
  CellNodes self_trace;
  CellNodes cross_trace;
  Node fused;
};

// Runs both cells of the pair. Gates must already be computed (from shared
// banks by default); `len_*` are true lengths, which drive the alignment even
// when the gate tensors carry padded rows.
inline std::pair<CtrnOutput, CtrnOutput> ctrn_pair(
    Tape& tape, const GateBundle& gates_q, const GateBundle& gates_a,
    std::size_t len_q, std::size_t len_a) {
  const std::size_t rows_q = gates_q.z->value.extent(0);
  const std::size_t rows_a = gates_a.z->value.extent(0);
  if (len_q < 1 || len_q > rows_q || len_a < 1 || len_a > rows_a) {
    throw ShapeError("ctrn_pair: length exceeds gate rows");
  }

  CtrnOutput q;
  CtrnOutput a;
  q.self_trace =
      fo_pool(tape, gates_q.f, gates_q.o, gates_q.z, identity_map(rows_q));
  a.self_trace =
      fo_pool(tape, gates_a.f, gates_a.o, gates_a.z, identity_map(rows_a));
  q.cross_trace = fo_pool(tape, gates_a.f, gates_a.o, gates_q.z,
                          align_map(rows_q, len_q, len_a));
  a.cross_trace = fo_pool(tape, gates_q.f, gates_q.o, gates_a.z,
                          align_map(rows_a, len_a, len_q));
  q.fused = hadamard_op(tape, q.self_trace.h, q.cross_trace.h);
  a.fused = hadamard_op(tape, a.self_trace.h, a.cross_trace.h);
  return {std::move(q), std::move(a)};
}

}  // namespace ctrn
