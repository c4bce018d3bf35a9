// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "dastnet/error.hpp"
#include "dastnet/forecaster.hpp"
#include "dastnet/spatial_encoder.hpp"
#include "support.hpp"

namespace dastnet {
namespace {

// Plain-loop GRU update for a single row.
std::vector<double> reference_gru(nn::Affine& u_gate, nn::Affine& r_gate, nn::Affine& cand,
                                  const std::vector<double>& x, const std::vector<double>& h) {
  const std::size_t nh = h.size();
  auto affine = [](nn::Affine& a, const std::vector<double>& in, std::size_t row) {
    double s = a.bias().value[row];
    for (std::size_t k = 0; k < in.size(); ++k) s += a.weight().value.at(row, k) * in[k];
    return s;
  };
  std::vector<double> xh(x);
  xh.insert(xh.end(), h.begin(), h.end());
  std::vector<double> u(nh), r(nh), rh(x);
  for (std::size_t j = 0; j < nh; ++j) {
    u[j] = 1.0 / (1.0 + std::exp(-affine(u_gate, xh, j)));
    r[j] = 1.0 / (1.0 + std::exp(-affine(r_gate, xh, j)));
  }
  for (std::size_t j = 0; j < nh; ++j) rh.push_back(r[j] * h[j]);
  std::vector<double> out(nh);
  for (std::size_t j = 0; j < nh; ++j) {
    const double c = std::tanh(affine(cand, rh, j));
    out[j] = u[j] * h[j] + (1.0 - u[j]) * c;
  }
  return out;
}

TemporalForecaster random_forecaster(const ForecasterDims& dims, std::uint64_t seed) {
  TemporalForecaster fc(dims);
  Rng rng(seed);
  fc.init(rng);
  for (auto* p : fc.params())
    if (p->value.rank() == 1)
      for (double& v : p->value.data()) v = rng.uniform(-0.2, 0.2);
  return fc;
}

TEST(Gru, ZeroParametersGiveZeroState) {
  TemporalForecaster fc({1, 4, 3, 2});
  fc.init_zero();
  ad::Tape tape;
  const auto h = fc.step(tape, tape.constant(Tensor({1, 1})), tape.constant(Tensor({1, 4})),
                         tape.constant(Tensor({1, 3})));
  EXPECT_EQ(h.value(), Tensor({1, 4}));
}

TEST(Gru, ReducesToStandardGruWhenEmbeddingBlockDropped) {
  const ForecasterDims dims{2, 5, 3, 1};
  TemporalForecaster fc = random_forecaster(dims, 4);
  auto& map = fc.state_map();
  map.weight().value.fill(0.0);
  map.bias().value.fill(0.0);
  for (std::size_t j = 0; j < dims.hidden; ++j) map.weight().value.at(j, dims.embed_dim + j) = 1.0;

  Rng rng(8);
  const Tensor x = testing::random_tensor({1, 2}, rng);
  const Tensor h = testing::random_tensor({1, 5}, rng);
  const Tensor f = testing::random_tensor({1, 3}, rng, 5.0);
  ad::Tape tape;
  const auto got = fc.step(tape, tape.constant(x), tape.constant(h), tape.constant(f));
  const auto want = reference_gru(fc.update_gate(), fc.reset_gate(), fc.candidate(),
                                  {x.values().begin(), x.values().end()},
                                  {h.values().begin(), h.values().end()});
  for (std::size_t j = 0; j < dims.hidden; ++j) EXPECT_NEAR(got.value()[j], want[j], 1e-12);
}

TEST(Gru, ShapeMismatchThrows) {
  TemporalForecaster fc({1, 4, 3, 2});
  ad::Tape tape;
  EXPECT_THROW(fc.step(tape, tape.constant(Tensor({2, 1})), tape.constant(Tensor({2, 4})),
                       tape.constant(Tensor({1, 3}))),
               DimensionError);
  EXPECT_THROW(fc.step(tape, tape.constant(Tensor({1, 2})), tape.constant(Tensor({1, 4})),
                       tape.constant(Tensor({1, 3}))),
               DimensionError);
}

TEST(Gru, StateGradientWrtUpdateGate) {
  const ForecasterDims dims{1, 4, 3, 1};
  TemporalForecaster fc = random_forecaster(dims, 21);
  Rng rng(22);
  const Tensor x = testing::random_tensor({2, 1}, rng);
  const Tensor h = testing::random_tensor({2, 4}, rng);
  const Tensor f = testing::random_tensor({2, 3}, rng);
  auto forward = [&](ad::Tape& tape) {
    const auto s = fc.step(tape, tape.constant(x), tape.constant(h), tape.constant(f));
    return ad::sum(ad::square(s));
  };
  const ParameterList theta_u{&fc.update_gate().weight()};
  const auto checks = testing::check_gradients(
      theta_u, [&] { ad::Tape t; return forward(t).value()[0]; },
      [&] { ad::Tape t; t.backward(forward(t)); });
  EXPECT_LT(checks.at(0).relative_error, 1e-4);
}

TEST(Forecast, ZeroParametersPredictHeadBias) {
  TemporalForecaster fc({1, 4, 3, 12});
  fc.init_zero();
  Rng rng(2);
  ad::Tape tape;
  const auto y = fc.forecast(tape, testing::random_tensor({3, 12}, rng),
                             tape.constant(testing::random_tensor({3, 3}, rng)));
  EXPECT_EQ(y.value(), Tensor({3, 12}));
}

class ForecastHorizon : public ::testing::TestWithParam<std::size_t> {};

TEST_P(ForecastHorizon, OutputLengthMatchesHorizon) {
  const std::size_t horizon = GetParam();
  TemporalForecaster fc = random_forecaster({1, 6, 4, horizon}, horizon);
  Rng rng(horizon);
  ad::Tape tape;
  const auto y = fc.forecast(tape, testing::random_tensor({5, 12}, rng),
                             tape.constant(testing::random_tensor({5, 4}, rng)));
  EXPECT_EQ(y.value().shape(), (Shape{5, horizon}));
  EXPECT_TRUE(y.value().all_finite());
}

INSTANTIATE_TEST_SUITE_P(Horizons, ForecastHorizon, ::testing::Values(3u, 6u, 12u));

TEST(Forecast, BatchMatchesOneAtATime) {
  TemporalForecaster fc = random_forecaster({2, 5, 3, 4}, 31);
  Rng rng(32);
  const std::size_t batch = 7;
  const Tensor history = testing::random_tensor({batch, 2 * 6}, rng);
  const Tensor emb = testing::random_tensor({batch, 3}, rng);
  ad::Tape tape;
  const Tensor all = fc.forecast(tape, history, tape.constant(emb)).value();
  for (std::size_t b = 0; b < batch; ++b) {
    Tensor hb({1, history.cols()}), eb({1, 3});
    for (std::size_t c = 0; c < history.cols(); ++c) hb.at(0, c) = history.at(b, c);
    for (std::size_t c = 0; c < 3; ++c) eb.at(0, c) = emb.at(b, c);
    ad::Tape single;
    const Tensor one = fc.forecast(single, hb, single.constant(eb)).value();
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(one.at(0, c), all.at(b, c), 1e-12);
  }
}

TEST(Forecast, HistoryShapeErrors) {
  TemporalForecaster fc({2, 4, 3, 2});
  ad::Tape tape;
  EXPECT_THROW(fc.forecast(tape, Tensor({1, 5}), tape.constant(Tensor({1, 3}))), DimensionError);
}

TEST(SourceLoss, HandExamplesAndHomogeneity) {
  ad::Tape tape;
  const Tensor y = Tensor::matrix(2, 1, {3.0, -2.0});
  EXPECT_EQ(source_loss(tape.constant(y), y).value()[0], 0.0);
  const auto pred = tape.constant(Tensor::matrix(2, 1, {4.0, -3.0}));
  EXPECT_DOUBLE_EQ(source_loss(pred, y).value()[0], 1.0);

  Rng rng(5);
  const Tensor target = testing::random_tensor({6, 3}, rng);
  const Tensor err = testing::random_tensor({6, 3}, rng);
  Tensor p1 = target, p2 = target;
  for (std::size_t i = 0; i < err.size(); ++i) {
    p1[i] += err[i];
    p2[i] += 2 * err[i];
  }
  const double l1 = source_loss(tape.constant(p1), target).value()[0];
  const double l2 = source_loss(tape.constant(p2), target).value()[0];
  EXPECT_GT(l1, 0.0);
  EXPECT_NEAR(l2, 2 * l1, 1e-12);
  EXPECT_THROW(source_loss(tape.constant(p1), Tensor({3, 6})), DimensionError);
}

TEST(Forecast, EndToEndGradientThroughEncoder) {
  Rng rng(40);
  const RoadGraph g(4, std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}});
  SpatialEncoder enc("enc.", 3, 8, 4, 1);
  enc.init(rng);
  enc.layer(0).eps.value[0] = 0.15;
  for (auto* p : enc.params())
    if (p->name.find(".b") != std::string::npos)
      for (double& v : p->value.data()) v = rng.uniform(0.05, 0.3);
  TemporalForecaster fc = random_forecaster({1, 8, 4, 3}, 41);
  const Tensor raw = testing::random_tensor({4, 3}, rng);
  const Tensor history = testing::random_tensor({4, 5}, rng);
  const Tensor target = testing::random_tensor({4, 3}, rng);
  auto forward = [&](ad::Tape& tape) {
    const auto f = gin_forward(tape, enc, tape.constant(raw), g);
    return ad::mean(ad::square(ad::sub(fc.forecast(tape, history, f), tape.constant(target))));
  };
  ParameterList params = enc.params();
  const auto fp = fc.params();
  params.insert(params.end(), fp.begin(), fp.end());
  const auto checks = testing::check_gradients(
      params, [&] { ad::Tape t; return forward(t).value()[0]; },
      [&] { ad::Tape t; t.backward(forward(t)); });
  for (const auto& c : checks) EXPECT_LT(c.relative_error, 1e-4) << c.name;
}

TEST(Forecast, ParameterNames) {
  TemporalForecaster fc({1, 4, 3, 2});
  EXPECT_EQ(parameter_names(fc.params()),
            (std::vector<std::string>{"fc.theta_u", "fc.b_u", "fc.theta_r", "fc.b_r",
                                      "fc.theta_c", "fc.b_c", "fc.mlp_gru.w", "fc.mlp_gru.b",
                                      "fc.out.w", "fc.out.b"}));
}

}  // namespace
}  // namespace dastnet
