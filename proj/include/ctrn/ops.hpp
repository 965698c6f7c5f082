// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Layer-granular tape ops. Each op computes its forward value eagerly and
// pushes one hand-written adjoint onto the tape. Gradients accumulate with
// += so shared inputs (e.g. conv banks used by both sequences) collect
// contributions from every use.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ctrn/error.hpp"
#include "ctrn/rng.hpp"
#include "ctrn/tape.hpp"
#include "ctrn/tensor.hpp"

namespace ctrn {

// Largest double below 1. Saturated activations are clamped to the open
// interval so downstream range invariants hold even where the true value
// rounds to an endpoint.
inline constexpr double kOpenUnitCeil = 0x1.fffffffffffffp-1;
inline constexpr double kOpenUnitFloor = 1e-300;

inline double sigmoid_scalar(double x) {
  double y;
  if (x >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    y = e / (1.0 + e);
  }
  if (y < kOpenUnitFloor) y = kOpenUnitFloor;
  if (y > kOpenUnitCeil) y = kOpenUnitCeil;
  return y;
}

inline double tanh_scalar(double x) {
  double y = std::tanh(x);
  if (y >= 1.0) y = kOpenUnitCeil;
  if (y <= -1.0) y = -kOpenUnitCeil;
  return y;
}

inline Node sigmoid_op(Tape& tape, const Node& x) {
  Tensor out(x->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out[i] = sigmoid_scalar(x->value[i]);
  }
  Node y = tape.output(std::move(out));
  tape.push([x, y] {
    for (std::size_t i = 0; i < y->value.numel(); ++i) {
      const double s = y->value[i];
      x->grad[i] += y->grad[i] * s * (1.0 - s);
    }
  });
  return y;
}

inline Node tanh_op(Tape& tape, const Node& x) {
  Tensor out(x->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out[i] = tanh_scalar(x->value[i]);
  }
  Node y = tape.output(std::move(out));
  tape.push([x, y] {
    for (std::size_t i = 0; i < y->value.numel(); ++i) {
      const double t = y->value[i];
      x->grad[i] += y->grad[i] * (1.0 - t * t);
    }
  });
  return y;
}

// Causal 1-D convolution: out[t] = bias + sum_j weights[j] . x[t-k+1+j],
// indices before the first step read as zero. weights are k x d x m.
inline Node conv1d(Tape& tape, const Node& x, const Node& weights,
                   const Node& bias) {
  const Tensor& xv = x->value;
  const Tensor& wv = weights->value;
  if (xv.ndim() != 2 || wv.ndim() != 3) {
    throw ShapeError("conv1d: x must be LxM, weights KxDxM");
  }
  const std::size_t L = xv.extent(0);
  const std::size_t m = xv.extent(1);
  const std::size_t k = wv.extent(0);
  const std::size_t d = wv.extent(1);
  if (wv.extent(2) != m) {
    throw ShapeError("conv1d: weight input width does not match x");
  }
  if (bias && bias->value.numel() != d) {
    throw ShapeError("conv1d: bias length does not match filter count");
  }

  Tensor out({L, d});
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      double acc = bias ? bias->value[c] : 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const std::ptrdiff_t p =
            static_cast<std::ptrdiff_t>(t + 1 + j) - static_cast<std::ptrdiff_t>(k);
        if (p < 0) continue;
        const std::size_t pu = static_cast<std::size_t>(p);
        for (std::size_t i = 0; i < m; ++i) {
          acc += wv(j, c, i) * xv(pu, i);
        }
      }
      out(t, c) = acc;
    }
  }
  Node y = tape.output(std::move(out));
  tape.push([x, weights, bias, y, L, m, k, d] {
    for (std::size_t t = 0; t < L; ++t) {
      for (std::size_t c = 0; c < d; ++c) {
        const double dy = y->grad(t, c);
        if (bias) bias->grad[c] += dy;
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t p =
              static_cast<std::ptrdiff_t>(t + 1 + j) - static_cast<std::ptrdiff_t>(k);
          if (p < 0) continue;
          const std::size_t pu = static_cast<std::size_t>(p);
          for (std::size_t i = 0; i < m; ++i) {
            weights->grad(j, c, i) += dy * x->value(pu, i);
            x->grad(pu, i) += dy * weights->value(j, c, i);
          }
        }
      }
    }
  });
  return y;
}

// Convolution parameters for one gate. Bias defaults on and zero-initialized;
// the accountant's Table-2 convention disables it.
struct ConvBank {
  Node weights;  // k x d x m
  Node bias;     // d, or null when disabled
};

inline Node conv1d(Tape& tape, const Node& x, const ConvBank& bank) {
  return conv1d(tape, x, bank.weights, bank.bias);
}

struct CellNodes {
  Node c;
  Node h;
};

inline std::vector<std::size_t> identity_map(std::size_t rows) {
  std::vector<std::size_t> idx(rows);
  for (std::size_t r = 0; r < rows; ++r) idx[r] = r;
  return idx;
}

// fo-pooling: c_t = f_t (.) c_{t-1} + (1 - f_t) (.) z_t, h_t = o_t (.) c_t,
// with c_0 = 0. `gate_index` maps each z step to the row of f/o it consumes:
// identity for a cell running on its own gates, the aligned-step map when a
// partner's gates are cross-applied. Gradients scatter-add through the map,
// so repeated gate rows accumulate correctly.
inline CellNodes fo_pool(Tape& tape, const Node& f, const Node& o,
                         const Node& z,
                         const std::vector<std::size_t>& gate_index) {
  const Tensor& fv = f->value;
  const Tensor& ov = o->value;
  const Tensor& zv = z->value;
  if (fv.ndim() != 2 || !fv.same_shape(ov) || zv.ndim() != 2 ||
      zv.extent(1) != fv.extent(1)) {
    throw ShapeError("fo_pool: gate/state shape mismatch");
  }
  const std::size_t L = zv.extent(0);
  const std::size_t d = zv.extent(1);
  if (gate_index.size() != L) {
    throw ShapeError("fo_pool: gate index map length mismatch");
  }
  for (std::size_t t = 0; t < L; ++t) {
    if (gate_index[t] >= fv.extent(0)) {
      throw IndexError("fo_pool: gate index out of range");
    }
  }

  Tensor c({L, d});
  Tensor h({L, d});
  for (std::size_t t = 0; t < L; ++t) {
    const std::size_t g = gate_index[t];
    for (std::size_t j = 0; j < d; ++j) {
      const double prev = t > 0 ? c(t - 1, j) : 0.0;
      const double ft = fv(g, j);
      c(t, j) = ft * prev + (1.0 - ft) * zv(t, j);
      h(t, j) = ov(g, j) * c(t, j);
    }
  }
  CellNodes out{tape.output(std::move(c)), tape.output(std::move(h))};
  Node cn = out.c;
  Node hn = out.h;
  std::vector<std::size_t> idx = gate_index;
  tape.push([f, o, z, cn, hn, idx, L, d] {
    std::vector<double> carry(d, 0.0);
    for (std::size_t t = L; t-- > 0;) {
      const std::size_t g = idx[t];
      for (std::size_t j = 0; j < d; ++j) {
        const double dh = hn->grad(t, j);
        const double dc = dh * o->value(g, j) + cn->grad(t, j) + carry[j];
        o->grad(g, j) += dh * cn->value(t, j);
        const double prev = t > 0 ? cn->value(t - 1, j) : 0.0;
        f->grad(g, j) += dc * (prev - z->value(t, j));
        z->grad(t, j) += dc * (1.0 - f->value(g, j));
        carry[j] = dc * f->value(g, j);
      }
    }
  });
  return out;
}

inline Node hadamard_op(Tape& tape, const Node& a, const Node& b) {
  check_same_shape(a->value, b->value, "hadamard");
  Tensor out(a->value.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out[i] = a->value[i] * b->value[i];
  }
  Node y = tape.output(std::move(out));
  tape.push([a, b, y] {
    for (std::size_t i = 0; i < y->value.numel(); ++i) {
      a->grad[i] += y->grad[i] * b->value[i];
      b->grad[i] += y->grad[i] * a->value[i];
    }
  });
  return y;
}

inline Node matmul_op(Tape& tape, const Node& a, const Node& b) {
  Node y = tape.output(matmul(a->value, b->value));
  tape.push([a, b, y] {
    const std::size_t n = a->value.rows();
    const std::size_t k = a->value.cols();
    const std::size_t p = b->value.cols();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        const double dy = y->grad(i, j);
        for (std::size_t q = 0; q < k; ++q) {
          a->grad(i, q) += dy * b->value(q, j);
          b->grad(q, j) += dy * a->value(i, q);
        }
      }
    }
  });
  return y;
}

// Average over unmasked rows of an LxD tensor.
inline Node mean_pool(Tape& tape, const Node& x,
                      const std::vector<std::uint8_t>& mask) {
  const Tensor& xv = x->value;
  if (xv.ndim() != 2 || mask.size() != xv.extent(0)) {
    throw ShapeError("mean_pool: mask length does not match rows");
  }
  std::size_t count = 0;
  for (std::uint8_t m : mask) count += m ? 1 : 0;
  if (count == 0) {
    throw EmptySequenceError("mean_pool: all steps masked");
  }
  const std::size_t L = xv.extent(0);
  const std::size_t d = xv.extent(1);
  Tensor out({d});
  for (std::size_t t = 0; t < L; ++t) {
    if (!mask[t]) continue;
    for (std::size_t j = 0; j < d; ++j) out[j] += xv(t, j);
  }
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t j = 0; j < d; ++j) out[j] *= inv;
  Node y = tape.output(std::move(out));
  std::vector<std::uint8_t> mcopy = mask;
  tape.push([x, y, mcopy, inv] {
    const std::size_t d = y->value.numel();
    for (std::size_t t = 0; t < mcopy.size(); ++t) {
      if (!mcopy[t]) continue;
      for (std::size_t j = 0; j < d; ++j) {
        x->grad(t, j) += y->grad[j] * inv;
      }
    }
  });
  return y;
}

inline Node concat_op(Tape& tape, const std::vector<Node>& parts) {
  std::size_t total = 0;
  for (const Node& p : parts) {
    if (p->value.ndim() != 1) throw ShapeError("concat: expects rank-1 parts");
    total += p->value.numel();
  }
  if (total == 0) throw ShapeError("concat: empty input");
  Tensor out({total});
  std::size_t off = 0;
  for (const Node& p : parts) {
    for (std::size_t i = 0; i < p->value.numel(); ++i) out[off + i] = p->value[i];
    off += p->value.numel();
  }
  Node y = tape.output(std::move(out));
  std::vector<Node> ps = parts;
  tape.push([ps, y] {
    std::size_t off = 0;
    for (const Node& p : ps) {
      for (std::size_t i = 0; i < p->value.numel(); ++i) {
        p->grad[i] += y->grad[off + i];
      }
      off += p->value.numel();
    }
  });
  return y;
}

// y = x . W + b for a rank-1 x and an (in x out) weight.
inline Node dense(Tape& tape, const Node& x, const Node& w, const Node& b) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  if (xv.ndim() != 1 || wv.ndim() != 2 || wv.extent(0) != xv.numel()) {
    throw ShapeError("dense: input width does not match weight rows");
  }
  const std::size_t in = wv.extent(0);
  const std::size_t out_dim = wv.extent(1);
  if (b->value.numel() != out_dim) {
    throw ShapeError("dense: bias length does not match weight columns");
  }
  Tensor out({out_dim});
  for (std::size_t j = 0; j < out_dim; ++j) out[j] = b->value[j];
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = xv[i];
    for (std::size_t j = 0; j < out_dim; ++j) out[j] += xi * wv(i, j);
  }
  Node y = tape.output(std::move(out));
  tape.push([x, w, b, y, in, out_dim] {
    for (std::size_t j = 0; j < out_dim; ++j) b->grad[j] += y->grad[j];
    for (std::size_t i = 0; i < in; ++i) {
      double dx = 0.0;
      for (std::size_t j = 0; j < out_dim; ++j) {
        const double dy = y->grad[j];
        w->grad(i, j) += x->value[i] * dy;
        dx += w->value(i, j) * dy;
      }
      x->grad[i] += dx;
    }
  });
  return y;
}

// Inverted dropout: kept units scale by 1/(1-rate) so inference is identity.
inline Node dropout_op(Tape& tape, const Node& x, double rate, bool active,
                       Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout: rate must lie in [0,1)");
  }
  if (!active || rate == 0.0) return x;
  const std::size_t n = x->value.numel();
  std::vector<double> factor(n);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < n; ++i) {
    factor[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  Tensor out(x->value.shape());
  for (std::size_t i = 0; i < n; ++i) out[i] = x->value[i] * factor[i];
  Node y = tape.output(std::move(out));
  tape.push([x, y, factor] {
    for (std::size_t i = 0; i < factor.size(); ++i) {
      x->grad[i] += y->grad[i] * factor[i];
    }
  });
  return y;
}

inline Node softmax_op(Tape& tape, const Node& logits) {
  const Tensor& lv = logits->value;
  if (lv.ndim() != 1) throw ShapeError("softmax: expects rank-1 logits");
  const std::size_t n = lv.numel();
  double mx = lv[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, lv[i]);
  Tensor out({n});
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(lv[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
  Node y = tape.output(std::move(out));
  tape.push([logits, y, n] {
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += y->grad[j] * y->value[j];
    for (std::size_t i = 0; i < n; ++i) {
      logits->grad[i] += y->value[i] * (y->grad[i] - dot);
    }
  });
  return y;
}

inline Node pick(Tape& tape, const Node& v, std::size_t i) {
  if (v->value.ndim() != 1 || i >= v->value.numel()) {
    throw IndexError("pick: index out of range");
  }
  Node y = tape.output(Tensor::vec({v->value[i]}));
  tape.push([v, y, i] { v->grad[i] += y->grad[0]; });
  return y;
}

inline constexpr double kScoreClip = 1e-12;

// Pointwise cross-entropy term on a probability. The score is clipped to
// [eps, 1-eps] before the log; outside the clip band the adjoint is zero
// (the clamp is flat there).
inline Node xent(Tape& tape, const Node& s, int label) {
  if (label != 0 && label != 1) {
    throw LabelError("xent: label must be 0 or 1");
  }
  if (s->value.numel() != 1) throw ShapeError("xent: score must be scalar");
  const double raw = s->value[0];
  const double sc = std::min(std::max(raw, kScoreClip), 1.0 - kScoreClip);
  const double loss =
      label == 1 ? -std::log(sc) : -std::log(1.0 - sc);
  Node y = tape.output(Tensor::vec({loss}));
  tape.push([s, y, label, raw, sc] {
    if (raw < kScoreClip || raw > 1.0 - kScoreClip) return;
    const double d = label == 1 ? -1.0 / sc : 1.0 / (1.0 - sc);
    s->grad[0] += y->grad[0] * d;
  });
  return y;
}

inline Node sum_scalars(Tape& tape, const std::vector<Node>& terms) {
  if (terms.empty()) throw ShapeError("sum_scalars: empty input");
  double total = 0.0;
  for (const Node& t : terms) {
    if (t->value.numel() != 1) throw ShapeError("sum_scalars: non-scalar term");
    total += t->value[0];
  }
  Node y = tape.output(Tensor::vec({total}));
  std::vector<Node> ts = terms;
  tape.push([ts, y] {
    for (const Node& t : ts) t->grad[0] += y->grad[0];
  });
  return y;
}

inline Node sum_all(Tape& tape, const Node& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < x->value.numel(); ++i) total += x->value[i];
  Node y = tape.output(Tensor::vec({total}));
  tape.push([x, y] {
    for (std::size_t i = 0; i < x->value.numel(); ++i) {
      x->grad[i] += y->grad[0];
    }
  });
  return y;
}

}  // namespace ctrn
