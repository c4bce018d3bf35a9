// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/forecaster.hpp"

#include "dastnet/error.hpp"

namespace dastnet {

TemporalForecaster::TemporalForecaster(const ForecasterDims& dims, const std::string& prefix)
    : dims_(dims),
      update_(prefix + "theta_u", prefix + "b_u", dims.signal_dim + dims.hidden, dims.hidden),
      reset_(prefix + "theta_r", prefix + "b_r", dims.signal_dim + dims.hidden, dims.hidden),
      candidate_(prefix + "theta_c", prefix + "b_c", dims.signal_dim + dims.hidden, dims.hidden),
      state_map_(prefix + "mlp_gru", dims.embed_dim + dims.hidden, dims.hidden),
      head_(prefix + "out", dims.hidden, dims.horizon * dims.signal_dim) {
  if (dims.signal_dim == 0 || dims.hidden == 0 || dims.embed_dim == 0 || dims.horizon == 0)
    throw DimensionError("forecaster dimensions must be positive");
}

void TemporalForecaster::init(Rng& rng) {
  update_.init_xavier(rng);
  reset_.init_xavier(rng);
  candidate_.init_xavier(rng);
  state_map_.init_xavier(rng);
  head_.init_xavier(rng);
}

void TemporalForecaster::init_zero() {
  for (auto* p : params()) p->value.fill(0.0);
}

ad::Var TemporalForecaster::step(ad::Tape& tape, const ad::Var& x, const ad::Var& h,
                                 const ad::Var& f) {
  const auto rows = x.value().rows();
  if (x.value().rank() != 2 || x.value().cols() != dims_.signal_dim ||
      h.value().rank() != 2 || h.value().cols() != dims_.hidden || h.value().rows() != rows ||
      f.value().rank() != 2 || f.value().cols() != dims_.embed_dim || f.value().rows() != rows)
    throw DimensionError("gru step shapes x" + shape_string(x.value().shape()) + " h" +
                         shape_string(h.value().shape()) + " f" +
                         shape_string(f.value().shape()) + " do not conform");
  const ad::Var xh = ad::concat(x, h, 1);
  const ad::Var u = ad::sigmoid(update_.forward(tape, xh));
  const ad::Var r = ad::sigmoid(reset_.forward(tape, xh));
  const ad::Var c = ad::tanh(candidate_.forward(tape, ad::concat(x, ad::mul(r, h), 1)));
  const ad::Var keep = ad::add_scalar(ad::scale(u, -1.0), 1.0);
  const ad::Var state = ad::add(ad::mul(u, h), ad::mul(keep, c));
  return state_map_.forward(tape, ad::concat(f, state, 1));
}

ad::Var TemporalForecaster::forecast(ad::Tape& tape, const Tensor& history,
                                     const ad::Var& embeddings) {
  const std::size_t nf = dims_.signal_dim;
  if (history.rank() != 2 || history.cols() % nf != 0 || history.cols() == 0)
    throw DimensionError("history " + shape_string(history.shape()) +
                         " is not [B x H' * N_f] for N_f=" + std::to_string(nf));
  const std::size_t batch = history.rows();
  const std::size_t steps = history.cols() / nf;
  ad::Var h = tape.constant(Tensor({batch, dims_.hidden}));
  for (std::size_t t = 0; t < steps; ++t) {
    Tensor x({batch, nf});
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t k = 0; k < nf; ++k) x.at(b, k) = history.at(b, t * nf + k);
    h = step(tape, tape.constant(std::move(x)), h, embeddings);
  }
  return head_.forward(tape, h);
}

ParameterList TemporalForecaster::params() {
  ParameterList out;
  for (auto* layer : {&update_, &reset_, &candidate_, &state_map_, &head_}) {
    auto p = layer->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

ad::Var gru_step(ad::Tape& tape, TemporalForecaster& forecaster, const ad::Var& x,
                 const ad::Var& h, const ad::Var& f) {
  return forecaster.step(tape, x, h, f);
}

ad::Var source_loss(const ad::Var& predictions, const Tensor& targets) {
  if (predictions.value().shape() != targets.shape())
    throw DimensionError("source loss: predictions " + shape_string(predictions.value().shape()) +
                         " vs targets " + shape_string(targets.shape()));
  return ad::mean(ad::abs(ad::sub(predictions, predictions.tape().constant(targets))));
}

}  // namespace dastnet
