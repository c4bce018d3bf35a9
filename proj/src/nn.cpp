// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/nn.hpp"

#include <cmath>

#include "dastnet/error.hpp"

namespace dastnet::nn {

Affine::Affine(const std::string& name, std::size_t in, std::size_t out)
    : Affine(name + ".w", name + ".b", in, out) {}

Affine::Affine(const std::string& weight_name, const std::string& bias_name, std::size_t in,
               std::size_t out)
    : weight_(weight_name, Tensor({out, in})), bias_(bias_name, Tensor({out})) {}

void Affine::init_xavier(Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim() + out_dim()));
  for (auto& w : weight_.value.data()) w = rng.uniform(-limit, limit);
  bias_.value.fill(0.0);
}

void Affine::init_identity() {
  if (in_dim() != out_dim())
    throw DimensionError("identity init needs a square map, got " +
                         shape_string(weight_.value.shape()));
  weight_.value.fill(0.0);
  for (std::size_t i = 0; i < in_dim(); ++i) weight_.value.at(i, i) = 1.0;
  bias_.value.fill(0.0);
}

void Affine::init_zero() {
  weight_.value.fill(0.0);
  bias_.value.fill(0.0);
}

ad::Var Affine::forward(ad::Tape& tape, const ad::Var& x) {
  return ad::add_row(ad::matmul_nt(x, tape.param(weight_)), tape.param(bias_));
}

}  // namespace dastnet::nn
