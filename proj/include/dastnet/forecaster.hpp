// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "dastnet/autodiff.hpp"
#include "dastnet/nn.hpp"

namespace dastnet {

struct ForecasterDims {
  std::size_t signal_dim = 1;  ///< N_f, features per node and time step
  std::size_t hidden = 64;
  std::size_t embed_dim = 64;  ///< D_f of the node embedding fed into every step
  std::size_t horizon = 12;    ///< H
};

/// GRU whose state update is passed, together with the node embedding,
/// through a shared affine map:
///
///   u = sigmoid(Theta_u [x; h] + b_u)
///   r = sigmoid(Theta_r [x; h] + b_r)
///   c = tanh(Theta_c [x; r*h] + b_c)
///   h' = MLP_gru([f; u*h + (1-u)*c])
///
/// followed by one affine output head from the last hidden state to all H
/// future steps at once. Everything is batched: rows are independent
/// (node, window) samples.
class TemporalForecaster {
 public:
  TemporalForecaster() = default;
  explicit TemporalForecaster(const ForecasterDims& dims, const std::string& prefix = "fc.");

  void init(Rng& rng);
  void init_zero();

  const ForecasterDims& dims() const { return dims_; }

  /// x: [B x N_f], h: [B x hidden], f: [B x D_f] -> [B x hidden]
  ad::Var step(ad::Tape& tape, const ad::Var& x, const ad::Var& h, const ad::Var& f);

  /// history: [B x H' * N_f], time-major within a row. embeddings: [B x D_f].
  /// Returns [B x H * N_f] predictions, horizon-major within a row.
  ad::Var forecast(ad::Tape& tape, const Tensor& history, const ad::Var& embeddings);

  /// Theta_u, b_u, Theta_r, b_r, Theta_c, b_c, MLP_gru, output head.
  ParameterList params();

  nn::Affine& update_gate() { return update_; }
  nn::Affine& reset_gate() { return reset_; }
  nn::Affine& candidate() { return candidate_; }
  nn::Affine& state_map() { return state_map_; }
  nn::Affine& output_head() { return head_; }

 private:
  ForecasterDims dims_;
  nn::Affine update_;
  nn::Affine reset_;
  nn::Affine candidate_;
  nn::Affine state_map_;
  nn::Affine head_;
};

/// Free-function form of TemporalForecaster::step.
ad::Var gru_step(ad::Tape& tape, TemporalForecaster& forecaster, const ad::Var& x,
                 const ad::Var& h, const ad::Var& f);

/// Mean absolute error over every (sample, horizon) entry:
/// (1/H) sum_tau (1/B) sum_v |y_hat - y|.
ad::Var source_loss(const ad::Var& predictions, const Tensor& targets);

}  // namespace dastnet
