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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "hmlab/simd.hpp"

using namespace hmlab::simd;

namespace {

std::vector<double> rand_vec(std::size_t n, std::mt19937_64& rng, double zero_frac = 0.0) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng) < zero_frac ? 0.0 : d(rng);
  return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

const KernelTable* fast() { return avx2_kernels(); }

}  // namespace

TEST(Kernels, ScalarReference) {
  const KernelTable& s = scalar_kernels();
  const std::vector<double> a = {1, 2, 3}, b = {4, -5, 6};
  EXPECT_DOUBLE_EQ(s.dot(a.data(), b.data(), 3), 12.0);
  std::vector<double> y = {1, 1, 1};
  s.axpy(2.0, a.data(), y.data(), 3);
  EXPECT_EQ(y, (std::vector<double>{3, 5, 7}));
  s.scale(0.5, y.data(), 3);
  EXPECT_EQ(y, (std::vector<double>{1.5, 2.5, 3.5}));
  std::vector<double> r = {-1, 0, 2};
  s.relu(r.data(), 3);
  EXPECT_EQ(r, (std::vector<double>{0, 0, 2}));
  EXPECT_DOUBLE_EQ(s.centered_sum_sq(a.data(), 2.0, 3), 2.0);
}

TEST(Kernels, SelectByName) {
  EXPECT_TRUE(select_kernels("scalar"));
  EXPECT_STREQ(active_kernels().name, "scalar");
  EXPECT_FALSE(select_kernels("sse9"));
  EXPECT_TRUE(select_kernels("auto"));
  if (fast()) {
    EXPECT_TRUE(select_kernels("avx2"));
    EXPECT_STREQ(active_kernels().name, "avx2");
  }
  select_kernels("auto");
}

TEST(Kernels, VectorOpsEquivalent) {
  if (!fast()) GTEST_SKIP() << "no AVX2 table on this machine";
  const KernelTable& s = scalar_kernels();
  const KernelTable& f = *fast();
  std::mt19937_64 rng(1);
  for (std::size_t n : {0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 31, 64, 101, 1000}) {
    const auto a = rand_vec(n, rng), b = rand_vec(n, rng);
    const double ds = s.dot(a.data(), b.data(), n), df = f.dot(a.data(), b.data(), n);
    EXPECT_NEAR(ds, df, 1e-12 * (1.0 + std::abs(ds)));
    auto y1 = b, y2 = b;
    s.axpy(0.3, a.data(), y1.data(), n);
    f.axpy(0.3, a.data(), y2.data(), n);
    EXPECT_LT(max_diff(y1, y2), 1e-14);
    s.scale(-1.7, y1.data(), n);
    f.scale(-1.7, y2.data(), n);
    EXPECT_LT(max_diff(y1, y2), 1e-14);
    y2 = y1;
    s.relu(y1.data(), n);
    f.relu(y2.data(), n);
    EXPECT_EQ(y1, y2);
    const double cs = s.centered_sum_sq(a.data(), 0.2, n);
    EXPECT_NEAR(cs, f.centered_sum_sq(a.data(), 0.2, n), 1e-12 * (1.0 + cs));
  }
}

TEST(Kernels, GemmMatchesNaive) {
  std::mt19937_64 rng(2);
  std::vector<const KernelTable*> tables = {&scalar_kernels()};
  if (fast()) tables.push_back(fast());
  for (const KernelTable* t : tables) {
    for (auto [m, k, n] : std::vector<std::array<std::size_t, 3>>{
             {1, 1, 1}, {3, 5, 2}, {7, 9, 16}, {10, 4, 17}, {33, 12, 35}, {5, 64, 3}}) {
      const auto X = rand_vec(m * k, rng, 0.5);
      const auto W = rand_vec(k * n, rng);
      const auto D = rand_vec(m * n, rng);

      std::vector<double> Y = rand_vec(m * n, rng), Yref = Y;
      t->gemm_nn(m, k, n, X.data(), k, W.data(), n, Y.data(), n);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t p = 0; p < k; ++p) Yref[i * n + j] += X[i * k + p] * W[p * n + j];
      EXPECT_LT(max_diff(Y, Yref), 1e-12) << t->name;

      std::vector<double> G = rand_vec(k * n, rng), Gref = G;
      t->gemm_tn(m, k, n, X.data(), k, D.data(), n, G.data(), n);
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t i = 0; i < m; ++i) Gref[p * n + j] += X[i * k + p] * D[i * n + j];
      EXPECT_LT(max_diff(G, Gref), 1e-12) << t->name;

      std::vector<double> O(m * k, 99.0), Oref(m * k, 0.0);
      t->gemm_nt(m, k, n, D.data(), n, W.data(), n, O.data(), k);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) Oref[i * k + p] += D[i * n + j] * W[p * n + j];
      EXPECT_LT(max_diff(O, Oref), 1e-12) << t->name;
    }
  }
}

TEST(Kernels, GemmStridedLeadingDimensions) {
  std::mt19937_64 rng(3);
  std::vector<const KernelTable*> tables = {&scalar_kernels()};
  if (fast()) tables.push_back(fast());
  const std::size_t m = 6, k = 5, n = 9, ld = 13;
  const auto X = rand_vec(m * ld, rng);
  const auto W = rand_vec(k * ld, rng);
  std::vector<std::vector<double>> outs;
  for (const KernelTable* t : tables) {
    std::vector<double> Y(m * ld, 0.0);
    t->gemm_nn(m, k, n, X.data(), ld, W.data(), ld, Y.data(), ld);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = n; j < ld; ++j) EXPECT_EQ(Y[i * ld + j], 0.0);
    outs.push_back(Y);
  }
  if (outs.size() == 2) { EXPECT_LT(max_diff(outs[0], outs[1]), 1e-12); }
}
