// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <unordered_map>

#include "dastnet/tensor.hpp"

namespace dastnet {

/// SGD with momentum. Velocity lives per parameter name and persists across
/// steps:
///   v = momentum * v + grad
///   param -= lr * v
class Sgdm {
 public:
  Sgdm(double learning_rate, double momentum) : lr_(learning_rate), momentum_(momentum) {}

  /// Updates every trainable parameter from its grad buffer.
  void step(const ParameterList& params);

  const Tensor* velocity(const std::string& name) const;
  void reset() { velocity_.clear(); }

 private:
  double lr_;
  double momentum_;
  std::unordered_map<std::string, Tensor> velocity_;
};

/// Scales all gradients so that their joint L2 norm is at most max_norm.
/// Returns the norm before clipping. max_norm <= 0 disables clipping.
double clip_global_norm(const ParameterList& params, double max_norm);

}  // namespace dastnet
