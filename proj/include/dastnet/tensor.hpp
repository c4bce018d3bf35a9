// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dastnet {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major tensor of doubles. Rank 1 and rank 2 are the only ranks the
/// model uses; higher ranks are representable but no kernel operates on them.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  /// Leading dimension (1 for rank-1 tensors viewed as a row).
  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  /// Trailing dimension.
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  std::span<double> data() { return values_; }
  std::span<const double> data() const { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  void fill(double v);
  /// this += other (shapes must match).
  void add_inplace(const Tensor& other);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// A trainable tensor with its gradient buffer. Owned by model modules; the
/// tape refers to parameters by pointer for the duration of one step.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = Tensor(value.shape()); }
};

/// Ordered, non-owning view of model parameters.
using ParameterList = std::vector<Parameter*>;

void zero_grads(const ParameterList& params);
std::size_t parameter_count(const ParameterList& params);
std::vector<std::string> parameter_names(const ParameterList& params);

}  // namespace dastnet
