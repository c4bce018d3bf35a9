// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "dastnet/tensor.hpp"

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape records every operation of one forward pass. `backward` walks the
// record in reverse, accumulating gradients into each node and finally into
// the Parameter objects that were bound with `Tape::param`. A node that feeds
// multiple consumers receives the sum of their gradients.
//
// No implicit broadcasting: binary ops need equal shapes. The two exceptions
// are explicit ops `add_row` (row-vector bias) and `scalar_mul`.

namespace dastnet::ad {

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

enum class Op : std::uint8_t {
  Constant,
  Param,
  MatMul,
  MatMulNT,
  AddRow,
  Add,
  Sub,
  Mul,
  Sigmoid,
  Tanh,
  Relu,
  Log,
  Scale,
  AddScalar,
  Abs,
  ClampMin,
  Square,
  ScalarMul,
  Concat,
  SoftmaxRows,
  GradReverse,
  Sum,
  Mean,
  GatherRows,
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Binds a parameter; binding the same parameter twice returns the same node.
  Var param(Parameter& p);

  /// Reverse accumulation from a scalar (single-element) loss. Parameter
  /// gradients are added into Parameter::grad.
  void backward(const Var& loss);

  /// Gradient of the last backward pass w.r.t. any node (zeros if unreached).
  Tensor grad(const Var& v) const;

  const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }
  Op op(std::uint32_t id) const { return nodes_[id].op; }
  std::span<const std::uint32_t> inputs(std::uint32_t id) const {
    return {nodes_[id].in.data(), nodes_[id].n_in};
  }

  struct Node {
    Op op = Op::Constant;
    std::array<std::uint32_t, 2> in{};
    std::uint8_t n_in = 0;
    Tensor value;
    double scalar = 0.0;
    std::size_t axis = 0;
    std::vector<std::size_t> index;
    Parameter* param = nullptr;
  };

  Var push(Node node);
  Node& node(std::uint32_t id) { return nodes_[id]; }

 private:
  void propagate(std::uint32_t id);
  Tensor& grad_buffer(std::uint32_t id);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::unordered_map<const Parameter*, std::uint32_t> bound_;
};

// Linear algebra.
Var matmul(const Var& a, const Var& b);     ///< a[m x k] b[k x n]
Var matmul_nt(const Var& a, const Var& b);  ///< a[m x k] b[n x k]^T
/// x[m x n] + bias[n] added to every row.
Var add_row(const Var& x, const Var& bias);

// Pointwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var sigmoid(const Var& x);
Var tanh(const Var& x);
Var relu(const Var& x);
/// Natural log; throws DomainError on non-positive input.
Var log(const Var& x);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double c);
Var abs(const Var& x);
Var clamp_min(const Var& x, double floor);
Var square(const Var& x);
/// s * x where s is a single-element variable; gradient flows to both.
Var scalar_mul(const Var& s, const Var& x);

enum class Elementwise { Add, Sub, Mul, Sigmoid, Tanh, Relu, Log, Scale };
/// Generic pointwise entry point. `b` is used by binary kinds, `factor` by Scale.
Var elementwise(Elementwise kind, const Var& a, const Var* b = nullptr, double factor = 1.0);

// Structure.
Var concat(const Var& a, const Var& b, std::size_t axis);
Var gather_rows(const Var& x, std::span<const std::size_t> rows);

/// Softmax of a rank-1 tensor, or of every row of a rank-2 tensor.
Var softmax_rows(const Var& x);

/// Identity forward; multiplies the upstream gradient by -factor on the way back.
Var grad_reverse(const Var& x, double factor);

// Reductions to a {1} scalar.
Var sum(const Var& x);
Var mean(const Var& x);

}  // namespace dastnet::ad
