// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/spatial_encoder.hpp"

#include "dastnet/error.hpp"

namespace dastnet {

GinLayer::GinLayer(const std::string& prefix, std::size_t in, std::size_t hidden,
                   std::size_t out)
    : eps(prefix + "eps", Tensor({1})),
      mlp1(prefix + "mlp.w1", prefix + "mlp.b1", in, hidden),
      mlp2(prefix + "mlp.w2", prefix + "mlp.b2", hidden, out) {}

ad::Var GinLayer::forward(ad::Tape& tape, const ad::Var& features, const ad::Var& aggregation) {
  const ad::Var neighbor_mean = ad::matmul(aggregation, features);
  const ad::Var own = ad::scalar_mul(ad::add_scalar(tape.param(eps), 1.0), features);
  const ad::Var hidden = ad::relu(mlp1.forward(tape, ad::add(own, neighbor_mean)));
  return mlp2.forward(tape, hidden);
}

ParameterList GinLayer::params() {
  return {&eps, &mlp1.weight(), &mlp1.bias(), &mlp2.weight(), &mlp2.bias()};
}

SpatialEncoder::SpatialEncoder(std::string prefix, std::size_t in_dim, std::size_t hidden_dim,
                               std::size_t out_dim, std::size_t layers)
    : prefix_(std::move(prefix)) {
  if (layers == 0) throw std::invalid_argument("spatial encoder needs at least one GIN layer");
  if (in_dim == 0 || hidden_dim == 0 || out_dim == 0)
    throw DimensionError("spatial encoder dimensions must be positive");
  layers_.reserve(layers);
  for (std::size_t k = 0; k < layers; ++k)
    layers_.emplace_back(prefix_ + "layer" + std::to_string(k) + ".", k == 0 ? in_dim : out_dim,
                         hidden_dim, out_dim);
}

void SpatialEncoder::init(Rng& rng) {
  for (auto& layer : layers_) {
    layer.eps.value.fill(0.0);
    layer.mlp1.init_xavier(rng);
    layer.mlp2.init_xavier(rng);
  }
}

ad::Var SpatialEncoder::forward(ad::Tape& tape, const ad::Var& features,
                                const Tensor& aggregation) {
  const Tensor& f = features.value();
  if (f.rank() != 2 || f.cols() != in_dim())
    throw DimensionError("spatial encoder expects [N x " + std::to_string(in_dim()) +
                         "] features, got " + shape_string(f.shape()));
  if (aggregation.rows() != f.rows() || aggregation.cols() != f.rows())
    throw DimensionError("feature rows " + std::to_string(f.rows()) +
                         " do not match graph with aggregation " +
                         shape_string(aggregation.shape()));
  const ad::Var agg = tape.constant(aggregation);
  ad::Var h = features;
  for (auto& layer : layers_) h = layer.forward(tape, h, agg);
  return h;
}

ad::Var SpatialEncoder::forward(ad::Tape& tape, const ad::Var& features, const RoadGraph& graph) {
  if (features.value().rows() != graph.node_count())
    throw DimensionError("feature rows " + std::to_string(features.value().rows()) +
                         " do not match graph node count " + std::to_string(graph.node_count()));
  return forward(tape, features, graph.mean_aggregation_matrix());
}

Tensor SpatialEncoder::embed(const Tensor& features, const RoadGraph& graph) {
  ad::Tape tape;
  return forward(tape, tape.constant(features), graph).value();
}

ParameterList SpatialEncoder::params() {
  ParameterList out;
  for (auto& layer : layers_) {
    auto p = layer.params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

ad::Var gin_forward(ad::Tape& tape, SpatialEncoder& encoder, const ad::Var& features,
                    const RoadGraph& graph) {
  return encoder.forward(tape, features, graph);
}

ParameterList encoder_params(SpatialEncoder& encoder) { return encoder.params(); }

}  // namespace dastnet
