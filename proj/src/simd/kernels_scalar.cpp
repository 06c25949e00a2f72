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

#include "kernels_internal.hpp"

namespace hmlab::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void relu_scalar(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

double centered_sum_sq_scalar(const double* x, double mean, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean;
    acc += d * d;
  }
  return acc;
}

void gemm_nn_scalar(std::size_t m, std::size_t k, std::size_t n, const double* X, std::size_t ldx,
                    const double* W, std::size_t ldw, double* Y, std::size_t ldy) {
  for (std::size_t r = 0; r < m; ++r) {
    double* y = Y + r * ldy;
    for (std::size_t j = 0; j < k; ++j) {
      const double a = X[r * ldx + j];
      if (a == 0.0) continue;
      const double* w = W + j * ldw;
      for (std::size_t c = 0; c < n; ++c) y[c] += a * w[c];
    }
  }
}

void gemm_tn_scalar(std::size_t m, std::size_t k, std::size_t n, const double* X, std::size_t ldx,
                    const double* D, std::size_t ldd, double* G, std::size_t ldg) {
  for (std::size_t r = 0; r < m; ++r) {
    const double* d = D + r * ldd;
    for (std::size_t j = 0; j < k; ++j) {
      const double a = X[r * ldx + j];
      if (a == 0.0) continue;
      double* g = G + j * ldg;
      for (std::size_t c = 0; c < n; ++c) g[c] += a * d[c];
    }
  }
}

void gemm_nt_scalar(std::size_t m, std::size_t k, std::size_t n, const double* D, std::size_t ldd,
                    const double* W, std::size_t ldw, double* O, std::size_t ldo) {
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < k; ++j) O[r * ldo + j] = dot_scalar(D + r * ldd, W + j * ldw, n);
  }
}

}  // namespace

const KernelTable kScalarTable{"scalar",       dot_scalar,     axpy_scalar,    scale_scalar,
                               relu_scalar,    centered_sum_sq_scalar,         gemm_nn_scalar,
                               gemm_tn_scalar, gemm_nt_scalar};

}  // namespace hmlab::simd::detail
