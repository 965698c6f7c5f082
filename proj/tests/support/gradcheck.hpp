// Copyright 2026 The ctrn authors. Apache 2.0 License.
//
// Finite-difference oracle for hand-written backwards: central differences
// with step 1e-5, relative error |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ctrn/tape.hpp"
#include "ctrn/tensor.hpp"

namespace ctrn::test {

inline double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

// `compute_grads` must zero grads, run one forward+backward (plus any extra
// analytic terms such as L2), leaving gradients in the nodes. `objective`
// re-evaluates the same scalar objective from current node values.
inline GradCheckResult check_gradients(
    const std::function<void()>& compute_grads,
    const std::function<double()>& objective, const std::vector<Node>& nodes,
    double step = 1e-5) {
  compute_grads();
  std::vector<Tensor> analytic;
  analytic.reserve(nodes.size());
  for (const Node& n : nodes) analytic.push_back(n->grad);

  GradCheckResult res;
  for (std::size_t p = 0; p < nodes.size(); ++p) {
    for (std::size_t i = 0; i < nodes[p]->value.numel(); ++i) {
      const double orig = nodes[p]->value[i];
      nodes[p]->value[i] = orig + step;
      const double fp = objective();
      nodes[p]->value[i] = orig - step;
      const double fm = objective();
      nodes[p]->value[i] = orig;
      const double numeric = (fp - fm) / (2.0 * step);
      res.max_rel_err =
          std::max(res.max_rel_err, rel_err(analytic[p][i], numeric));
      ++res.checked;
    }
  }
  return res;
}

}  // namespace ctrn::test
