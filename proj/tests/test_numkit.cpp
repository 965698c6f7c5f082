// Copyright 2026 The ctrn authors. Apache 2.0 License.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "ctrn/ops.hpp"
#include "ctrn/tape.hpp"
#include "ctrn/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace ctrn;
using ctrn::test::check_gradients;

namespace {

// Random-weighted sum of all elements; more sensitive than plain summation
// when checking gradients.
Node weighted_sum(Tape& tape, const Node& y, const Node& weights) {
  return sum_all(tape, hadamard_op(tape, y, weights));
}

}  // namespace

TEST_CASE("tensor elementwise and matmul basics") {
  const Tensor a = Tensor::mat({{1.0, 2.0}, {3.0, 4.0}});
  const Tensor eye = Tensor::mat({{1.0, 0.0}, {0.0, 1.0}});
  const Tensor prod = matmul(a, eye);
  for (std::size_t i = 0; i < a.numel(); ++i) REQUIRE(prod[i] == a[i]);

  const Tensor h = hadamard(Tensor::vec({1.0, -1.0}), Tensor::vec({-1.0, -1.0}));
  REQUIRE(h[0] == -1.0);
  REQUIRE(h[1] == 1.0);

  const Tensor c = concat(Tensor::vec({1.0}), Tensor::vec({2.0, 3.0}));
  REQUIRE(c.numel() == 3);
  REQUIRE(c[0] == 1.0);
  REQUIRE(c[1] == 2.0);
  REQUIRE(c[2] == 3.0);

  const Tensor s = scale(Tensor::vec({1.0, -2.0}), -0.5);
  REQUIRE(s[0] == -0.5);
  REQUIRE(s[1] == 1.0);
  const Tensor d = sub(Tensor::vec({3.0}), Tensor::vec({5.0}));
  REQUIRE(d[0] == -2.0);

  REQUIRE_THROWS_AS(add(Tensor({2}), Tensor({3})), ShapeError);
  REQUIRE_THROWS_AS(matmul(Tensor({2, 3}), Tensor({2, 3})), ShapeError);
  REQUIRE_THROWS_AS(Tensor({1, 2, 3, 4}), ShapeError);
}

TEST_CASE("activation values") {
  Tape tape;
  Node x = make_leaf(Tensor::vec({0.0, std::log(3.0)}));
  Node s = sigmoid_op(tape, x);
  REQUIRE(s->value[0] == 0.5);
  REQUIRE(s->value[1] == Catch::Approx(0.75).epsilon(1e-12));

  Node t = tanh_op(tape, x);
  REQUIRE(t->value[0] == 0.0);
}

TEST_CASE("activations stay strictly inside open ranges") {
  Tape tape;
  Node x = make_leaf(Tensor::vec({-1e4, -50.0, 0.0, 50.0, 1e4}));
  Node s = sigmoid_op(tape, x);
  Node t = tanh_op(tape, x);
  for (std::size_t i = 0; i < 5; ++i) {
    REQUIRE(s->value[i] > 0.0);
    REQUIRE(s->value[i] < 1.0);
    REQUIRE(t->value[i] > -1.0);
    REQUIRE(t->value[i] < 1.0);
  }
}

TEST_CASE("activation derivatives at zero") {
  Tape tape;
  Node x = make_leaf(Tensor::vec({0.0}));
  Node s = sigmoid_op(tape, x);
  tape.backward(sum_all(tape, s));
  REQUIRE(x->grad[0] == Catch::Approx(0.25).epsilon(1e-12));

  Tape tape2;
  Node x2 = make_leaf(Tensor::vec({0.0}));
  Node t = tanh_op(tape2, x2);
  tape2.backward(sum_all(tape2, t));
  REQUIRE(x2->grad[0] == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("conv1d hand cases") {
  SECTION("zero weights and input give zeros") {
    Tape tape;
    Node x = make_leaf(Tensor({3, 2}));
    Node w = make_leaf(Tensor({2, 4, 2}));
    Node b = make_leaf(Tensor({4}));
    Node y = conv1d(tape, x, w, b);
    for (std::size_t i = 0; i < y->value.numel(); ++i) {
      REQUIRE(y->value[i] == 0.0);
    }
  }
  SECTION("k=1 identity kernel reproduces the input") {
    Tape tape;
    Rng rng(3);
    Node x = make_leaf(Tensor::uniform({4, 3}, -1.0, 1.0, rng));
    Tensor wt({1, 3, 3});
    for (std::size_t c = 0; c < 3; ++c) wt(0, c, c) = 1.0;
    Node w = make_leaf(wt);
    Node b = make_leaf(Tensor({3}));
    Node y = conv1d(tape, x, w, b);
    for (std::size_t i = 0; i < y->value.numel(); ++i) {
      REQUIRE(y->value[i] == x->value[i]);
    }
  }
  SECTION("k=2 causal sum") {
    Tape tape;
    Node x = make_leaf(Tensor::mat({{1.0}, {2.0}, {3.0}}));
    Tensor wt({2, 1, 1});
    wt(0, 0, 0) = 1.0;
    wt(1, 0, 0) = 1.0;
    Node w = make_leaf(wt);
    Node b = make_leaf(Tensor({1}));
    Node y = conv1d(tape, x, w, b);
    REQUIRE(y->value[0] == 1.0);
    REQUIRE(y->value[1] == 3.0);
    REQUIRE(y->value[2] == 5.0);
  }
  SECTION("shape mismatch throws") {
    Tape tape;
    Node x = make_leaf(Tensor({3, 2}));
    Node w = make_leaf(Tensor({2, 4, 3}));
    Node b = make_leaf(Tensor({4}));
    REQUIRE_THROWS_AS(conv1d(tape, x, w, b), ShapeError);
  }
}

TEST_CASE("conv1d causal prefix property") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t L = 3 + rng.index(5);
    const std::size_t m = 1 + rng.index(3);
    const std::size_t d = 1 + rng.index(3);
    const std::size_t k = 1 + rng.index(3);
    Tensor xt = Tensor::uniform({L, m}, -1.0, 1.0, rng);
    Tensor wt = Tensor::uniform({k, d, m}, -1.0, 1.0, rng);
    Tensor bt = Tensor::uniform({d}, -0.5, 0.5, rng);
    const std::size_t cut = rng.index(L);

    Tape tape;
    Node y_full = conv1d(tape, make_leaf(xt), make_leaf(wt), make_leaf(bt));
    Tensor x_zeroed = xt;
    for (std::size_t t = cut + 1; t < L; ++t) {
      for (std::size_t i = 0; i < m; ++i) x_zeroed(t, i) = 0.0;
    }
    Node y_cut = conv1d(tape, make_leaf(x_zeroed), make_leaf(wt), make_leaf(bt));
    for (std::size_t t = 0; t <= cut; ++t) {
      for (std::size_t c = 0; c < d; ++c) {
        REQUIRE(y_full->value(t, c) == y_cut->value(t, c));
      }
    }
  }
}

TEST_CASE("fo_pool hand cases") {
  SECTION("open gate copies z") {
    Tape tape;
    Node f = make_leaf(Tensor({2, 1}));
    Node o = make_leaf(Tensor::filled({2, 1}, 1.0));
    Node z = make_leaf(Tensor::mat({{0.3}, {-0.7}}));
    auto cell = fo_pool(tape, f, o, z, identity_map(2));
    REQUIRE(cell.c->value(0, 0) == 0.3);
    REQUIRE(cell.c->value(1, 0) == -0.7);
  }
  SECTION("closed gate carries zero initial state") {
    Tape tape;
    Node f = make_leaf(Tensor::filled({2, 1}, 1.0));
    Node o = make_leaf(Tensor::filled({2, 1}, 1.0));
    Node z = make_leaf(Tensor::mat({{0.3}, {-0.7}}));
    auto cell = fo_pool(tape, f, o, z, identity_map(2));
    REQUIRE(cell.c->value(0, 0) == 0.0);
    REQUIRE(cell.c->value(1, 0) == 0.0);
  }
  SECTION("half-open gates, hand recurrence") {
    Tape tape;
    Node f = make_leaf(Tensor::filled({2, 1}, 0.5));
    Node o = make_leaf(Tensor::filled({2, 1}, 1.0));
    Node z = make_leaf(Tensor::mat({{1.0}, {-1.0}}));
    auto cell = fo_pool(tape, f, o, z, identity_map(2));
    REQUIRE(cell.c->value(0, 0) == Catch::Approx(0.5).epsilon(1e-15));
    REQUIRE(cell.c->value(1, 0) == Catch::Approx(-0.25).epsilon(1e-15));
    REQUIRE(cell.h->value(1, 0) == Catch::Approx(-0.25).epsilon(1e-15));
  }
}

TEST_CASE("backward without a forward record is a state error") {
  Tape tape;
  Node leaf = make_leaf(Tensor::vec({1.0}));
  REQUIRE_THROWS_AS(tape.backward(leaf), StateError);
}

TEST_CASE("ops are deterministic given identical inputs") {
  const auto run = [] {
    Rng rng(99);
    Tape tape;
    Node x = make_leaf(Tensor::uniform({5, 3}, -1.0, 1.0, rng));
    Node w = make_leaf(Tensor::uniform({2, 4, 3}, -1.0, 1.0, rng));
    Node b = make_leaf(Tensor::uniform({4}, -0.1, 0.1, rng));
    Node y = tanh_op(tape, conv1d(tape, x, w, b));
    auto cell = fo_pool(tape, sigmoid_op(tape, y), sigmoid_op(tape, y), y,
                        identity_map(5));
    return cell.h->value;
  };
  const Tensor a = run();
  const Tensor b = run();
  REQUIRE(a.data() == b.data());
}

TEST_CASE("backwards match the finite-difference oracle on random shapes") {
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    Rng rng(seed * 7919 + 1);
    const std::size_t L = 2 + rng.index(5);
    const std::size_t m = 1 + rng.index(3);
    const std::size_t d = 1 + rng.index(4);
    const std::size_t k = 1 + rng.index(3);

    Node x = make_leaf(Tensor::uniform({L, m}, -1.0, 1.0, rng));
    Node w = make_leaf(Tensor::uniform({k, d, m}, -1.0, 1.0, rng));
    Node b = make_leaf(Tensor::uniform({d}, -0.3, 0.3, rng));
    Node rc = make_leaf(Tensor::uniform({L, d}, -1.0, 1.0, rng));
    Node rh = make_leaf(Tensor::uniform({L, d}, -1.0, 1.0, rng));

    // Random cross map exercises repeated gate rows.
    std::vector<std::size_t> map(L);
    for (auto& v : map) v = rng.index(L);

    std::vector<std::uint8_t> mask(L, 0);
    mask[rng.index(L)] = 1;
    for (auto& mv : mask) {
      if (rng.uniform() < 0.6) mv = 1;
    }
    Node rp = make_leaf(Tensor::uniform({d}, -1.0, 1.0, rng));

    const auto forward = [&](Tape& tape) {
      Node pre = conv1d(tape, x, w, b);
      Node z = tanh_op(tape, pre);
      Node f = sigmoid_op(tape, pre);
      Node o = sigmoid_op(tape, pre);
      auto cell = fo_pool(tape, f, o, z, map);
      Node fused = hadamard_op(tape, cell.h, rc);
      Node pooled = mean_pool(tape, fused, mask);
      Node term1 = weighted_sum(tape, pooled, rp);
      Node term2 = weighted_sum(tape, cell.c, rh);
      return sum_scalars(tape, {term1, term2});
    };
    const auto objective = [&] {
      Tape tape;
      return forward(tape)->value[0];
    };
    const auto compute = [&] {
      for (Node n : {x, w, b, rc, rh, rp}) n->grad.fill(0.0);
      Tape tape;
      tape.backward(forward(tape));
    };
    const auto res = check_gradients(compute, objective, {x, w, b});
    worst = std::max(worst, res.max_rel_err);
    cases += res.checked;
  }
  INFO("checked " << cases << " partials, worst rel err " << worst);
  REQUIRE(cases > 0);
  REQUIRE(worst < 1e-4);
}

TEST_CASE("dense, softmax, pick, xent, dropout, matmul gradients") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed + 31);
    const std::size_t in = 2 + rng.index(4);
    const std::size_t out = 2 + rng.index(3);
    Node x = make_leaf(Tensor::uniform({in}, -1.0, 1.0, rng));
    Node w = make_leaf(Tensor::uniform({in, out}, -1.0, 1.0, rng));
    Node b = make_leaf(Tensor::uniform({out}, -0.3, 0.3, rng));
    Node w2 = make_leaf(Tensor::uniform({out, 2}, -1.0, 1.0, rng));
    Node b2 = make_leaf(Tensor::uniform({2}, -0.3, 0.3, rng));
    const int label = rng.uniform() < 0.5 ? 1 : 0;
    const std::uint64_t drop_seed = rng.next_u64();

    const auto forward = [&](Tape& tape) {
      Rng drop_rng(drop_seed);
      Node hid = tanh_op(tape, dense(tape, x, w, b));
      Node dropped = dropout_op(tape, hid, 0.5, true, drop_rng);
      Node logits = dense(tape, dropped, w2, b2);
      Node probs = softmax_op(tape, logits);
      Node s = pick(tape, probs, 0);
      return xent(tape, s, label);
    };
    const auto objective = [&] {
      Tape tape;
      return forward(tape)->value[0];
    };
    const auto compute = [&] {
      for (Node n : {x, w, b, w2, b2}) n->grad.fill(0.0);
      Tape tape;
      tape.backward(forward(tape));
    };
    const auto res = check_gradients(compute, objective, {x, w, b, w2, b2});
    worst = std::max(worst, res.max_rel_err);
  }
  REQUIRE(worst < 1e-4);

  // matmul
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 77);
    Node a = make_leaf(Tensor::uniform({2 + rng.index(2), 3}, -1.0, 1.0, rng));
    Node b = make_leaf(Tensor::uniform({3, 2 + rng.index(2)}, -1.0, 1.0, rng));
    const auto forward = [&](Tape& tape) {
      return sum_all(tape, matmul_op(tape, a, b));
    };
    const auto res = check_gradients(
        [&] {
          a->grad.fill(0.0);
          b->grad.fill(0.0);
          Tape tape;
          tape.backward(forward(tape));
        },
        [&] {
          Tape tape;
          return forward(tape)->value[0];
        },
        {a, b});
    REQUIRE(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("softmax probabilities sum to one and shift-invariance holds") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    const double l0 = rng.uniform(-5.0, 5.0);
    const double l1 = rng.uniform(-5.0, 5.0);
    const double shift = rng.uniform(-10.0, 10.0);
    Node p = softmax_op(tape, make_leaf(Tensor::vec({l0, l1})));
    Node q = softmax_op(tape, make_leaf(Tensor::vec({l0 + shift, l1 + shift})));
    REQUIRE(std::abs(p->value[0] + p->value[1] - 1.0) < 1e-12);
    REQUIRE(p->value[0] == Catch::Approx(q->value[0]).margin(1e-12));
  }
}

TEST_CASE("dropout identity modes and seeded mask") {
  Tape tape;
  Rng rng(1);
  Node x = make_leaf(Tensor::vec({1.0, 2.0, 3.0, 4.0}));
  REQUIRE(dropout_op(tape, x, 0.5, false, rng) == x);
  REQUIRE(dropout_op(tape, x, 0.0, true, rng) == x);

  Rng r1(123);
  Rng r2(123);
  Node a = dropout_op(tape, x, 0.5, true, r1);
  Node b = dropout_op(tape, x, 0.5, true, r2);
  REQUIRE(a->value.data() == b->value.data());
  for (std::size_t i = 0; i < 4; ++i) {
    const bool kept = a->value[i] != 0.0;
    if (kept) REQUIRE(a->value[i] == 2.0 * x->value[i]);
  }
}

TEST_CASE("mean_pool edge cases") {
  Tape tape;
  Node x = make_leaf(Tensor::mat({{1.0, 2.0}, {3.0, 4.0}}));
  Node full = mean_pool(tape, x, {1, 1});
  REQUIRE(full->value[0] == 2.0);
  REQUIRE(full->value[1] == 3.0);

  Node padded = make_leaf(Tensor::mat({{1.0, 2.0}, {9.0, 9.0}}));
  Node masked = mean_pool(tape, padded, {1, 0});
  REQUIRE(masked->value[0] == 1.0);
  REQUIRE(masked->value[1] == 2.0);

  Node single = mean_pool(tape, make_leaf(Tensor::mat({{7.0, -3.0}})), {1});
  REQUIRE(single->value[0] == 7.0);
  REQUIRE(single->value[1] == -3.0);

  REQUIRE_THROWS_AS(mean_pool(tape, x, {0, 0}), EmptySequenceError);
}
