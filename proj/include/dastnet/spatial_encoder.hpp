// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dastnet/autodiff.hpp"
#include "dastnet/graph.hpp"
#include "dastnet/nn.hpp"

namespace dastnet {

/// One GIN layer with a mean neighbor aggregator:
///   f_v' = MLP((1 + eps) * f_v + mean_{u in N(v)} f_u)
/// where MLP = affine -> ReLU -> affine and the mean over an empty
/// neighborhood is the zero vector.
struct GinLayer {
  Parameter eps;
  nn::Affine mlp1;
  nn::Affine mlp2;

  GinLayer() = default;
  GinLayer(const std::string& prefix, std::size_t in, std::size_t hidden, std::size_t out);

  std::size_t in_dim() const { return mlp1.in_dim(); }
  std::size_t out_dim() const { return mlp2.out_dim(); }

  ad::Var forward(ad::Tape& tape, const ad::Var& features, const ad::Var& aggregation);
  ParameterList params();
};

/// K stacked GIN layers mapping raw node features to node embeddings.
/// Used for the per-source encoders, the target encoder and the private
/// encoder; they differ only in name prefix and parameters.
class SpatialEncoder {
 public:
  SpatialEncoder() = default;
  SpatialEncoder(std::string prefix, std::size_t in_dim, std::size_t hidden_dim,
                 std::size_t out_dim, std::size_t layers);

  /// eps = 0; MLP weights Xavier-uniform, biases zero.
  void init(Rng& rng);

  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }
  std::size_t layer_count() const { return layers_.size(); }
  const std::string& prefix() const { return prefix_; }
  GinLayer& layer(std::size_t k) { return layers_[k]; }

  /// features: [N x in_dim] on the tape; aggregation: graph.mean_aggregation_matrix().
  ad::Var forward(ad::Tape& tape, const ad::Var& features, const Tensor& aggregation);
  ad::Var forward(ad::Tape& tape, const ad::Var& features, const RoadGraph& graph);

  /// Forward pass on a private tape; returns the [N x out_dim] embeddings.
  Tensor embed(const Tensor& features, const RoadGraph& graph);

  /// Stable order: layer by layer, eps then mlp.w1, mlp.b1, mlp.w2, mlp.b2.
  ParameterList params();

 private:
  std::string prefix_;
  std::vector<GinLayer> layers_;
};

/// Free-function form of SpatialEncoder::forward.
ad::Var gin_forward(ad::Tape& tape, SpatialEncoder& encoder, const ad::Var& features,
                    const RoadGraph& graph);

/// Name-ordered parameter list of an encoder.
ParameterList encoder_params(SpatialEncoder& encoder);

}  // namespace dastnet
