// Copyright 2026 The ctrn authors. Apache 2.0 License.

#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "ctrn/error.hpp"
#include "ctrn/rng.hpp"

namespace ctrn {

// Dense row-major array of 64-bit floats, rank 1 to 3.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 3) {
      throw ShapeError("tensor rank must be 1..3");
    }
    std::size_t n = 1;
    for (std::size_t e : shape_) {
      if (e == 0) throw ShapeError("tensor extent must be positive");
      n *= e;
    }
    data_.assign(n, 0.0);
  }

  Tensor(std::initializer_list<std::size_t> shape)
      : Tensor(std::vector<std::size_t>(shape)) {}

  static Tensor vec(std::initializer_list<double> values) {
    Tensor t({values.size()});
    std::size_t i = 0;
    for (double v : values) t.data_[i++] = v;
    return t;
  }

  static Tensor mat(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = rows.begin()->size();
    Tensor t({r, c});
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged matrix literal");
      for (double v : row) t.data_[i++] = v;
    }
    return t;
  }

  static Tensor filled(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    for (double& v : t.data_) v = value;
    return t;
  }

  static Tensor uniform(std::vector<std::size_t> shape, double lo, double hi,
                        Rng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data_) v = rng.uniform(lo, hi);
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t extent(std::size_t i) const { return shape_[i]; }
  std::size_t numel() const { return data_.size(); }

  // 2-D convenience.
  std::size_t rows() const { return shape_[0]; }
  std::size_t cols() const { return shape_[shape_.size() - 1]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t i) { return data_[i]; }
  double operator()(std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(double v) {
    for (double& x : data_) x = v;
  }

  Tensor zeros_like() const { return Tensor(shape_); }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline void check_same_shape(const Tensor& a, const Tensor& b,
                             const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch");
  }
}

inline bool all_finite(const Tensor& t) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline void require_finite(const Tensor& t, const char* what) {
  if (!all_finite(t)) {
    throw StateError(std::string(what) + ": non-finite value");
  }
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "hadamard");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * b[i];
  return out;
}

inline Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i] * s;
  return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul: incompatible shapes");
  }
  Tensor out({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out(i, j) += aik * b(k, j);
      }
    }
  }
  return out;
}

inline Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 1 || b.ndim() != 1) {
    throw ShapeError("concat: expects rank-1 tensors");
  }
  Tensor out({a.numel() + b.numel()});
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = a[i];
  for (std::size_t i = 0; i < b.numel(); ++i) out[a.numel() + i] = b[i];
  return out;
}

}  // namespace ctrn
