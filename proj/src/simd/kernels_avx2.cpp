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

// Compiled with -mavx2 -mfma. Nothing in this file may be called unless the
// dispatcher has confirmed CPU support.

#include <immintrin.h>

#include "kernels_internal.hpp"

namespace hmlab::simd::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void relu_avx2(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

double centered_sum_sq_avx2(const double* x, double mean, std::size_t n) {
  const __m256d vm = _mm256_set1_pd(mean);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

// Y row chunk of 16 columns kept in registers while the k loop runs.
void gemm_nn_avx2(std::size_t m, std::size_t k, std::size_t n, const double* X, std::size_t ldx,
                  const double* W, std::size_t ldw, double* Y, std::size_t ldy) {
  for (std::size_t r = 0; r < m; ++r) {
    const double* x = X + r * ldx;
    double* y = Y + r * ldy;
    std::size_t c = 0;
    for (; c + 16 <= n; c += 16) {
      __m256d a0 = _mm256_loadu_pd(y + c);
      __m256d a1 = _mm256_loadu_pd(y + c + 4);
      __m256d a2 = _mm256_loadu_pd(y + c + 8);
      __m256d a3 = _mm256_loadu_pd(y + c + 12);
      for (std::size_t j = 0; j < k; ++j) {
        if (x[j] == 0.0) continue;
        const __m256d v = _mm256_set1_pd(x[j]);
        const double* w = W + j * ldw + c;
        a0 = _mm256_fmadd_pd(v, _mm256_loadu_pd(w), a0);
        a1 = _mm256_fmadd_pd(v, _mm256_loadu_pd(w + 4), a1);
        a2 = _mm256_fmadd_pd(v, _mm256_loadu_pd(w + 8), a2);
        a3 = _mm256_fmadd_pd(v, _mm256_loadu_pd(w + 12), a3);
      }
      _mm256_storeu_pd(y + c, a0);
      _mm256_storeu_pd(y + c + 4, a1);
      _mm256_storeu_pd(y + c + 8, a2);
      _mm256_storeu_pd(y + c + 12, a3);
    }
    for (; c + 4 <= n; c += 4) {
      __m256d a0 = _mm256_loadu_pd(y + c);
      for (std::size_t j = 0; j < k; ++j) {
        if (x[j] == 0.0) continue;
        a0 = _mm256_fmadd_pd(_mm256_set1_pd(x[j]), _mm256_loadu_pd(W + j * ldw + c), a0);
      }
      _mm256_storeu_pd(y + c, a0);
    }
    for (; c < n; ++c) {
      double acc = y[c];
      for (std::size_t j = 0; j < k; ++j) {
        if (x[j] != 0.0) acc += x[j] * W[j * ldw + c];
      }
      y[c] = acc;
    }
  }
}

void gemm_tn_avx2(std::size_t m, std::size_t k, std::size_t n, const double* X, std::size_t ldx,
                  const double* D, std::size_t ldd, double* G, std::size_t ldg) {
  for (std::size_t j = 0; j < k; ++j) {
    double* g = G + j * ldg;
    std::size_t c = 0;
    for (; c + 16 <= n; c += 16) {
      __m256d a0 = _mm256_loadu_pd(g + c);
      __m256d a1 = _mm256_loadu_pd(g + c + 4);
      __m256d a2 = _mm256_loadu_pd(g + c + 8);
      __m256d a3 = _mm256_loadu_pd(g + c + 12);
      for (std::size_t r = 0; r < m; ++r) {
        const double x = X[r * ldx + j];
        if (x == 0.0) continue;
        const __m256d v = _mm256_set1_pd(x);
        const double* d = D + r * ldd + c;
        a0 = _mm256_fmadd_pd(v, _mm256_loadu_pd(d), a0);
        a1 = _mm256_fmadd_pd(v, _mm256_loadu_pd(d + 4), a1);
        a2 = _mm256_fmadd_pd(v, _mm256_loadu_pd(d + 8), a2);
        a3 = _mm256_fmadd_pd(v, _mm256_loadu_pd(d + 12), a3);
      }
      _mm256_storeu_pd(g + c, a0);
      _mm256_storeu_pd(g + c + 4, a1);
      _mm256_storeu_pd(g + c + 8, a2);
      _mm256_storeu_pd(g + c + 12, a3);
    }
    for (; c + 4 <= n; c += 4) {
      __m256d a0 = _mm256_loadu_pd(g + c);
      for (std::size_t r = 0; r < m; ++r) {
        const double x = X[r * ldx + j];
        if (x == 0.0) continue;
        a0 = _mm256_fmadd_pd(_mm256_set1_pd(x), _mm256_loadu_pd(D + r * ldd + c), a0);
      }
      _mm256_storeu_pd(g + c, a0);
    }
    for (; c < n; ++c) {
      double acc = g[c];
      for (std::size_t r = 0; r < m; ++r) {
        const double x = X[r * ldx + j];
        if (x != 0.0) acc += x * D[r * ldd + c];
      }
      g[c] = acc;
    }
  }
}

void gemm_nt_avx2(std::size_t m, std::size_t k, std::size_t n, const double* D, std::size_t ldd,
                  const double* W, std::size_t ldw, double* O, std::size_t ldo) {
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < k; ++j) O[r * ldo + j] = dot_avx2(D + r * ldd, W + j * ldw, n);
  }
}

}  // namespace

const KernelTable kAvx2Table{"avx2",       dot_avx2,     axpy_avx2,    scale_avx2,
                             relu_avx2,    centered_sum_sq_avx2,       gemm_nn_avx2,
                             gemm_tn_avx2, gemm_nt_avx2};

}  // namespace hmlab::simd::detail
