// Copyright 2026 The hypermarl-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense double-precision inner loops used by the MLP, the optimiser and the
// gradient diagnostics. A scalar reference table is always built; an AVX2/FMA
// table is built on x86-64 and chosen at runtime when the CPU supports it.
//
// Selection can be forced with HYPERMARL_LAB_KERNELS=scalar|avx2|auto.

#include <cstddef>
#include <span>
#include <string_view>

namespace hmlab::simd {

struct KernelTable {
  const char* name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  // x[i] = max(x[i], 0)
  void (*relu)(double* x, std::size_t n);
  // sum_i (x[i] - mean)^2
  double (*centered_sum_sq)(const double* x, double mean, std::size_t n);

  // Row-major matrix products over leading dimensions ld*. Zero entries of X
  // are skipped (ReLU outputs and one-hot inputs are sparse).
  // Y (m x n) += X (m x k) * W (k x n)
  void (*gemm_nn)(std::size_t m, std::size_t k, std::size_t n, const double* X, std::size_t ldx,
                  const double* W, std::size_t ldw, double* Y, std::size_t ldy);
  // G (k x n) += X^T * D, X (m x k), D (m x n)
  void (*gemm_tn)(std::size_t m, std::size_t k, std::size_t n, const double* X, std::size_t ldx,
                  const double* D, std::size_t ldd, double* G, std::size_t ldg);
  // O (m x k) = D (m x n) * W^T, W (k x n)
  void (*gemm_nt)(std::size_t m, std::size_t k, std::size_t n, const double* D, std::size_t ldd,
                  const double* W, std::size_t ldw, double* O, std::size_t ldo);
};

const KernelTable& scalar_kernels();

// nullptr when the build has no AVX2 table or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// The table every caller goes through. Resolved once on first use.
const KernelTable& active_kernels();

// Overrides the process-wide selection; returns false if `name` is unknown or
// unavailable on this machine. Intended for tests and benchmarks.
bool select_kernels(std::string_view name);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) {
  active_kernels().scale(alpha, x.data(), x.size());
}

inline void relu(std::span<double> x) { active_kernels().relu(x.data(), x.size()); }

}  // namespace hmlab::simd
