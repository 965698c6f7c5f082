// Copyright 2026 The ctrn authors. Apache 2.0 License.

#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "ctrn/error.hpp"
#include "ctrn/tensor.hpp"

namespace ctrn {

// A value paired with its gradient accumulator. Parameters live in these
// slots for the whole training run; intermediate activations get one per
// forward pass.
struct GradSlot {
  Tensor value;
  Tensor grad;
  bool from_tape = false;

  explicit GradSlot(Tensor v) : value(std::move(v)), grad(value.shape()) {}
};

using Node = std::shared_ptr<GradSlot>;

inline Node make_leaf(Tensor v) { return std::make_shared<GradSlot>(std::move(v)); }

// Records layer-granular forward ops; backward replays the hand-written
// adjoints in reverse order, accumulating into each GradSlot::grad.
class Tape {
 public:
  using BackFn = std::function<void()>;

  Node output(Tensor value) {
    Node n = std::make_shared<GradSlot>(std::move(value));
    n->from_tape = true;
    return n;
  }

  void push(BackFn fn) { steps_.push_back(std::move(fn)); }

  std::size_t recorded() const { return steps_.size(); }

  // Seeds the scalar `loss` with gradient 1 and walks the tape backwards.
  void backward(const Node& loss) {
    if (!loss->from_tape) {
      throw StateError("backward: node has no forward record on this tape");
    }
    if (loss->value.numel() != 1) {
      throw ShapeError("backward: seed must be a scalar");
    }
    loss->grad[0] = 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
      (*it)();
    }
  }

 private:
  std::vector<BackFn> steps_;
};

}  // namespace ctrn
