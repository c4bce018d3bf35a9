// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#include "dastnet/kernels.hpp"

#include <omp.h>

namespace dastnet::kernels {

namespace {

inline void matmul_row(const double* a, const double* b, double* out, std::size_t k,
                       std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p];
    if (av == 0.0) continue;
    const double* brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += av * brow[j];
  }
}

inline void matmul_nt_row(const double* a, const double* b, double* out, std::size_t k,
                          std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double* brow = b + j * k;
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += a[p] * brow[p];
    out[j] += acc;
  }
}

// Row i of a^T b: sum over p of a[p][i] * b[p][:].
inline void matmul_tn_row(const double* a, const double* b, double* out, std::size_t i,
                          std::size_t k, std::size_t m, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p * m + i];
    if (av == 0.0) continue;
    const double* brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += av * brow[j];
  }
}

}  // namespace

namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) matmul_row(a.data() + i * k, b.data(), out.data() + i * n, k, n);
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    matmul_nt_row(a.data() + i * k, b.data(), out.data() + i * n, k, n);
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t k, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    matmul_tn_row(a.data(), b.data(), out.data() + i * n, i, k, m, n);
}

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<long>(m);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    matmul_row(a.data() + r * k, b.data(), out.data() + r * n, k, n);
  }
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<long>(m);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    matmul_nt_row(a.data() + r * k, b.data(), out.data() + r * n, k, n);
  }
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t k, std::size_t m, std::size_t n) {
  const auto rows = static_cast<long>(m);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < rows; ++i) {
    const auto r = static_cast<std::size_t>(i);
    matmul_tn_row(a.data(), b.data(), out.data() + r * n, r, k, m, n);
  }
}

}  // namespace parallel

namespace {
bool go_parallel(std::size_t work) {
  return work >= kParallelThreshold && omp_get_max_threads() > 1 && !omp_in_parallel();
}
}  // namespace

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n))
    parallel::matmul(a, b, out, m, k, n);
  else
    serial::matmul(a, b, out, m, k, n);
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t m, std::size_t k, std::size_t n) {
  if (go_parallel(m * k * n))
    parallel::matmul_nt(a, b, out, m, k, n);
  else
    serial::matmul_nt(a, b, out, m, k, n);
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t k, std::size_t m, std::size_t n) {
  if (go_parallel(m * k * n))
    parallel::matmul_tn(a, b, out, k, m, n);
  else
    serial::matmul_tn(a, b, out, k, m, n);
}

}  // namespace dastnet::kernels
