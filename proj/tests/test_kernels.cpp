// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <omp.h>
#include <ostream>

#include <vector>

#include "dastnet/kernels.hpp"
#include "support.hpp"

namespace dastnet {
namespace {

std::vector<double> random_values(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Plain triple loop, the reference both kernel families are held to.
std::vector<double> naive(const std::vector<double>& a, const std::vector<double>& b, std::size_t m,
                          std::size_t k, std::size_t n, bool a_t, bool b_t) {
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) {
        const double av = a_t ? a[p * m + i] : a[i * k + p];
        const double bv = b_t ? b[j * k + p] : b[p * n + j];
        out[i * n + j] += av * bv;
      }
  return out;
}

struct Dims {
  std::size_t m, k, n;
};

void PrintTo(const Dims& d, std::ostream* os) { *os << d.m << "x" << d.k << "x" << d.n; }

class KernelTest : public ::testing::TestWithParam<Dims> {};

TEST_P(KernelTest, SerialMatchesNaiveAndParallelMatchesSerial) {
  const auto [m, k, n] = GetParam();
  Rng rng(derive_seed(7, "kernels", m * 1000 + k * 10 + n));
  const auto a = random_values(m * k, rng);
  const auto b = random_values(k * n, rng);
  const auto bt = random_values(n * k, rng);
  const auto at = random_values(k * m, rng);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);

  auto run = [&](auto fn, const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> out(m * n, 0.5);
    fn(x, y, out);
    return out;
  };
  const auto ref_nn = naive(a, b, m, k, n, false, false);
  const auto ref_nt = naive(a, bt, m, k, n, false, true);
  const auto ref_tn = naive(at, b, m, k, n, true, false);

  const auto s_nn = run([&](auto& x, auto& y, auto& o) { kernels::serial::matmul(x, y, o, m, k, n); }, a, b);
  const auto p_nn = run([&](auto& x, auto& y, auto& o) { kernels::parallel::matmul(x, y, o, m, k, n); }, a, b);
  const auto s_nt = run([&](auto& x, auto& y, auto& o) { kernels::serial::matmul_nt(x, y, o, m, k, n); }, a, bt);
  const auto p_nt = run([&](auto& x, auto& y, auto& o) { kernels::parallel::matmul_nt(x, y, o, m, k, n); }, a, bt);
  const auto s_tn = run([&](auto& x, auto& y, auto& o) { kernels::serial::matmul_tn(x, y, o, k, m, n); }, at, b);
  const auto p_tn = run([&](auto& x, auto& y, auto& o) { kernels::parallel::matmul_tn(x, y, o, k, m, n); }, at, b);
  const auto d_nn = run([&](auto& x, auto& y, auto& o) { kernels::matmul(x, y, o, m, k, n); }, a, b);
  omp_set_num_threads(saved);

  for (std::size_t i = 0; i < m * n; ++i) {
    EXPECT_NEAR(s_nn[i], ref_nn[i] + 0.5, 1e-12);
    EXPECT_NEAR(s_nt[i], ref_nt[i] + 0.5, 1e-12);
    EXPECT_NEAR(s_tn[i], ref_tn[i] + 0.5, 1e-12);
  }
  EXPECT_EQ(s_nn, p_nn);
  EXPECT_EQ(s_nt, p_nt);
  EXPECT_EQ(s_tn, p_tn);
  EXPECT_EQ(s_nn, d_nn);
}

INSTANTIATE_TEST_SUITE_P(Shapes, KernelTest,
                         ::testing::Values(Dims{1, 1, 1}, Dims{3, 5, 2}, Dims{17, 9, 31},
                                           Dims{64, 33, 16}, Dims{300, 257, 40}));

}  // namespace
}  // namespace dastnet
