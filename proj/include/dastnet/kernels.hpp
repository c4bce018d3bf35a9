// Copyright 2026 The DastNet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

// Dense row-major matrix kernels used by the autodiff tape.
//
// Every kernel exists twice: a serial reference in `kernels::serial` and an
// OpenMP version in `kernels::parallel`. The parallel versions split work by
// output row only, so each output element is accumulated in exactly the same
// order as in the serial reference and results are bit-identical.
//
// Outputs are accumulated into (`out += ...`), never overwritten.

namespace dastnet::kernels {

namespace serial {

/// out[m x n] += a[m x k] * b[k x n]
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t n);

/// out[m x n] += a[m x k] * b[n x k]^T
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t m, std::size_t k, std::size_t n);

/// out[m x n] += a[k x m]^T * b[k x n]
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t k, std::size_t m, std::size_t n);

}  // namespace serial

namespace parallel {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t k, std::size_t m, std::size_t n);

}  // namespace parallel

/// Work (multiply-adds) below which the dispatchers stay serial.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

// Dispatchers: parallel above the threshold, serial otherwise.
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
            std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> out,
               std::size_t k, std::size_t m, std::size_t n);

}  // namespace dastnet::kernels
