// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/optimizer.hpp"

#include <cmath>

#include "dastnet/error.hpp"

namespace dastnet {

void Sgdm::step(const ParameterList& params) {
  for (auto* p : params) {
    if (!p->trainable) continue;
    if (p->grad.shape() != p->value.shape())
      throw DimensionError("gradient of '" + p->name + "' has shape " + shape_string(p->grad.shape()) +
                           ", parameter " + shape_string(p->value.shape()));
    auto [it, inserted] = velocity_.try_emplace(p->name, p->value.shape());
    Tensor& v = it->second;
    if (v.shape() != p->value.shape())
      throw DimensionError("optimizer state for '" + p->name + "' has the wrong shape");
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = momentum_ * v[i] + p->grad[i];
      p->value[i] -= lr_ * v[i];
    }
  }
}

const Tensor* Sgdm::velocity(const std::string& name) const {
  auto it = velocity_.find(name);
  return it == velocity_.end() ? nullptr : &it->second;
}

double clip_global_norm(const ParameterList& params, double max_norm) {
  double ss = 0.0;
  for (const auto* p : params)
    for (double g : p->grad.values()) ss += g * g;
  const double norm = std::sqrt(ss);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto* p : params)
      for (auto& g : p->grad.data()) g *= s;
  }
  return norm;
}

}  // namespace dastnet
