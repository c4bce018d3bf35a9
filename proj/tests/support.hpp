// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dastnet/rng.hpp"
#include "dastnet/tensor.hpp"

namespace dastnet::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensor t(shape);
  for (double& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

struct GradCheck {
  std::string name;
  double relative_error = 0.0;
};

/// Central-difference check of every parameter's analytic gradient.
/// `loss` must rebuild the forward pass from current parameter values and
/// `analytic` must fill Parameter::grad. Relative error is
/// ||g - g_fd|| / max(||g||, ||g_fd||, floor) over the whole tensor.
inline std::vector<GradCheck> check_gradients(const ParameterList& params,
                                              const std::function<double()>& loss,
                                              const std::function<void()>& analytic,
                                              double h = 1e-5) {
  zero_grads(params);
  analytic();
  std::vector<GradCheck> out;
  for (Parameter* p : params) {
    double diff = 0.0, norm_a = 0.0, norm_fd = 0.0;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = loss();
      p->value[i] = saved - h;
      const double down = loss();
      p->value[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      diff += (p->grad[i] - fd) * (p->grad[i] - fd);
      norm_a += p->grad[i] * p->grad[i];
      norm_fd += fd * fd;
    }
    const double denom = std::max({std::sqrt(norm_a), std::sqrt(norm_fd), 1e-8});
    out.push_back({p->name, std::sqrt(diff) / denom});
  }
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dastnet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dastnet::testing
