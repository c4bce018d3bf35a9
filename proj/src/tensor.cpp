// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>

#include "dastnet/error.hpp"

namespace dastnet {

void warn(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

namespace {
std::size_t checked_product(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  std::size_t n = 1;
  for (auto d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  values_.assign(checked_product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (checked_product(shape_) != values_.size())
    throw DimensionError("shape " + shape_string(shape_) + " does not match " +
                         std::to_string(values_.size()) + " values");
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::add_inplace(const Tensor& other) {
  if (other.shape_ != shape_)
    throw DimensionError("cannot accumulate " + shape_string(other.shape_) + " into " +
                         shape_string(shape_));
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void zero_grads(const ParameterList& params) {
  for (auto* p : params) p->zero_grad();
}

std::size_t parameter_count(const ParameterList& params) {
  return std::accumulate(params.begin(), params.end(), std::size_t{0},
                         [](std::size_t acc, const Parameter* p) { return acc + p->value.size(); });
}

std::vector<std::string> parameter_names(const ParameterList& params) {
  std::vector<std::string> names;
  names.reserve(params.size());
  for (const auto* p : params) names.push_back(p->name);
  return names;
}

}  // namespace dastnet
