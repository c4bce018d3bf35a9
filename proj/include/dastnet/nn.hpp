// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "dastnet/autodiff.hpp"
#include "dastnet/rng.hpp"
#include "dastnet/tensor.hpp"

namespace dastnet::nn {

/// y = x W^T + b, with W stored as [out x in].
class Affine {
 public:
  Affine() = default;
  /// Parameters named `<name>.w` and `<name>.b`.
  Affine(const std::string& name, std::size_t in, std::size_t out);
  Affine(const std::string& weight_name, const std::string& bias_name, std::size_t in,
         std::size_t out);

  std::size_t in_dim() const { return weight_.value.cols(); }
  std::size_t out_dim() const { return weight_.value.rows(); }

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)), zero bias.
  void init_xavier(Rng& rng);
  /// Identity weight (requires in == out) and zero bias.
  void init_identity();
  void init_zero();

  /// x: [batch x in] -> [batch x out]
  ad::Var forward(ad::Tape& tape, const ad::Var& x);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

  ParameterList params() { return {&weight_, &bias_}; }

 private:
  Parameter weight_;
  Parameter bias_;
};

}  // namespace dastnet::nn
