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

#include "hmlab/errors.hpp"
#include "hmlab/nn.hpp"
#include "oracle.hpp"

using namespace hmlab;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double gram_error(const Tensor2& w, double gain) {
  // Gram matrix of the smaller dimension against gain^2 I.
  const bool tall = w.rows >= w.cols;
  const std::size_t m = tall ? w.cols : w.rows;
  const std::size_t k = tall ? w.rows : w.cols;
  double worst = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        s += tall ? w(i, a) * w(i, b) : w(a, i) * w(b, i);
      }
      worst = std::max(worst, std::abs(s - (a == b ? gain * gain : 0.0)));
    }
  }
  return worst;
}

}  // namespace

TEST(Forward, ZeroNetIsUniform) {
  const MlpShape shape({5, 4, 3});
  std::vector<double> p(shape.param_count(), 0.0);
  ForwardCache c;
  const auto probs = forward(shape, p, std::vector<double>{1, -2, 3, 0, 5}, c);
  for (double q : probs) EXPECT_DOUBLE_EQ(q, 1.0 / 3.0);
}

TEST(Forward, SingleLayerHandSoftmax) {
  const MlpShape shape({2, 2});
  // Identity weights, zero bias.
  std::vector<double> p = {1, 0, 0, 1, 0, 0};
  ForwardCache c;
  const auto probs = forward(shape, p, std::vector<double>{5, 0}, c);
  EXPECT_NEAR(probs[0], 0.9933071490757153, 1e-15);
  EXPECT_NEAR(probs[1], 0.0066928509242848554, 1e-15);
}

TEST(Forward, MatchesOracleAndNormalises) {
  std::mt19937_64 rng(1);
  for (std::size_t h : {4, 8, 16, 32, 64}) {
    const MlpShape shape({6, h, 3});
    const auto p = random_vec(shape.param_count(), rng);
    const auto x = random_vec(6, rng, 3.0);
    ForwardCache c;
    const auto probs = forward(shape, p, x, c);
    const auto ref = oracle::mlp_log_probs(shape.dims(), p, x);
    double s = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      s += probs[a];
      EXPECT_NEAR(std::log(probs[a]), ref[a], 1e-9 * std::max(1.0, std::abs(ref[a])));
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Forward, LargeInputsStayFinite) {
  std::mt19937_64 rng(2);
  const MlpShape shape({4, 8, 4});
  const auto p = random_vec(shape.param_count(), rng, 3.0);
  ForwardCache c;
  for (double mag : {1e2, 1e3}) {
    const std::vector<double> x = {mag, -mag, mag, -mag};
    for (double q : forward(shape, p, x, c)) EXPECT_TRUE(std::isfinite(q));
  }
}

TEST(Forward, Errors) {
  const MlpShape shape({3, 2});
  std::vector<double> p(shape.param_count(), 0.0);
  ForwardCache c;
  EXPECT_THROW(forward(shape, p, std::vector<double>{1, 2}, c), InputError);
  EXPECT_THROW(forward(shape, p, std::vector<double>{1, NAN, 2}, c), InputError);
  EXPECT_THROW(MlpShape({3}), InputError);
}

TEST(Backward, FiniteDifferencesAllWidths) {
  std::mt19937_64 rng(3);
  for (std::size_t h : {4, 8, 16, 32, 64}) {
    for (int trial = 0; trial < 5; ++trial) {
      const MlpShape shape({5, h, 4});
      const auto p = random_vec(shape.param_count(), rng, 0.7);
      const auto x = random_vec(5, rng);
      const int action = static_cast<int>(rng() % 4);
      ForwardCache c;
      forward(shape, p, x, c);
      const FlatGradient g = backward_logprob(shape, p, c, action);
      const auto fd = oracle::central_diff(
          [&](const std::vector<double>& q) { return oracle::mlp_log_probs(shape.dims(), q, x)[action]; },
          p);
      EXPECT_LT(oracle::max_rel_error(g.values, fd), 1e-4) << "hidden " << h;
    }
  }
}

TEST(Backward, OutputBiasIsOneHotMinusProbs) {
  std::mt19937_64 rng(4);
  const MlpShape shape({3, 4, 2});
  const auto p = random_vec(shape.param_count(), rng);
  ForwardCache c;
  const auto probs = forward(shape, p, std::vector<double>{0.3, -1.0, 2.0}, c);
  const std::vector<double> pr(probs.begin(), probs.end());
  const FlatGradient g = backward_logprob(shape, p, c, 1);
  const std::size_t b = shape.bias_offset(1);
  EXPECT_NEAR(g.values[b], -pr[0], 1e-15);
  EXPECT_NEAR(g.values[b + 1], 1.0 - pr[1], 1e-15);
}

TEST(Backward, ZeroNetZeroFirstLayerGradient) {
  const MlpShape shape({3, 4, 2});
  std::vector<double> p(shape.param_count(), 0.0);
  ForwardCache c;
  forward(shape, p, std::vector<double>{0, 0, 0}, c);
  const FlatGradient g = backward_logprob(shape, p, c, 0);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(g.values[shape.weight_offset(0) + i], 0.0);
}

TEST(Backward, Errors) {
  const MlpShape shape({2, 2});
  std::vector<double> p(shape.param_count(), 0.0);
  ForwardCache c;
  forward(shape, p, std::vector<double>{1, 1}, c);
  EXPECT_THROW(backward_logprob(shape, p, c, 2), InputError);
  EXPECT_THROW(backward_logprob(shape, p, c, -1), InputError);
}

TEST(Layout, CanonicalOrderingAndRoundTrip) {
  const MlpShape shape({3, 4, 2});
  const ParamLayout l = shape.layout("net.");
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0].name, "net.layer0.weight");
  EXPECT_EQ(l[1].offset, 12u);
  EXPECT_EQ(l[3].name, "net.layer1.bias");
  EXPECT_EQ(layout_size(l), shape.param_count());

  std::mt19937_64 rng(5);
  MlpParams mp(shape);
  mp.flat = random_vec(shape.param_count(), rng);
  const Tensor2 w = mp.weight(1);
  EXPECT_EQ(w(2, 1), mp.flat[shape.weight_offset(1) + 2 * 2 + 1]);
  MlpParams back(shape);
  for (std::size_t k = 0; k < 2; ++k) {
    const Tensor2 wk = mp.weight(k);
    std::copy(wk.data.begin(), wk.data.end(), back.weight_span(k).begin());
    std::copy(mp.bias(k).begin(), mp.bias(k).end(), back.bias_span(k).begin());
  }
  EXPECT_EQ(back.flat, mp.flat);
}

TEST(Orthogonal, GramAndGain) {
  Rng rng(6);
  for (auto [r, c] : std::vector<std::pair<int, int>>{{5, 5}, {8, 3}, {3, 8}, {1, 4}, {16, 16}}) {
    EXPECT_LT(gram_error(orthogonal_init(r, c, 1.0, rng), 1.0), 1e-8);
    EXPECT_LT(gram_error(orthogonal_init(r, c, 2.0, rng), 2.0), 1e-8);
  }
}

TEST(Orthogonal, WideRowsHaveUnitCosineDistance) {
  Rng rng(7);
  const Tensor2 e = orthogonal_init(4, 6, 1.0, rng);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      double dot = 0, na = 0, nb = 0;
      for (std::size_t i = 0; i < 6; ++i) {
        dot += e(a, i) * e(b, i);
        na += e(a, i) * e(a, i);
        nb += e(b, i) * e(b, i);
      }
      EXPECT_NEAR(1.0 - dot / std::sqrt(na * nb), 1.0, 1e-8);
    }
  }
}

TEST(Orthogonal, DeterministicAndGainScalesExactly) {
  Rng a(8), b(8);
  const Tensor2 x = orthogonal_init(6, 4, 1.0, a);
  const Tensor2 y = orthogonal_init(6, 4, 2.0, b);
  for (std::size_t i = 0; i < x.data.size(); ++i) EXPECT_DOUBLE_EQ(2.0 * x.data[i], y.data[i]);
}

TEST(FanIn, SupportAndVariance) {
  Rng rng(9);
  const Tensor2 w = fan_in_uniform_init(25, 4000, rng);
  const double bound = 0.2;
  double s = 0, ss = 0;
  for (double v : w.data) {
    EXPECT_LE(std::abs(v), bound);
    s += v;
    ss += v * v;
  }
  const double n = static_cast<double>(w.data.size());
  const double var = ss / n - (s / n) * (s / n);
  EXPECT_NEAR(var, (1.0 / 3.0) / 25.0, 0.05 * (1.0 / 3.0) / 25.0);
  const Tensor2 one = fan_in_uniform_init(1, 100, rng);
  for (double v : one.data) EXPECT_LE(std::abs(v), 1.0);
}

TEST(Sgd, Arithmetic) {
  std::vector<double> p = {1.0};
  sgd_step(p, std::vector<double>{2.0}, 0.01);
  EXPECT_DOUBLE_EQ(p[0], 0.98);
  std::vector<double> q = {1.0, -3.0};
  sgd_step(q, std::vector<double>{5.0, 7.0}, 0.0);
  EXPECT_EQ(q, (std::vector<double>{1.0, -3.0}));
  EXPECT_THROW(sgd_step(q, std::vector<double>{1.0}, 0.1), InputError);
}

TEST(Sgd, TwoStepsEqualSummedStep) {
  std::vector<double> a = {0.5, -1.25, 2.0};
  std::vector<double> b = a;
  const std::vector<double> g1 = {0.25, 0.5, -1.0};
  const std::vector<double> g2 = {1.0, -0.75, 0.125};
  sgd_step(a, g1, 0.5);
  sgd_step(a, g2, 0.5);
  std::vector<double> g(3);
  for (int i = 0; i < 3; ++i) g[i] = g1[i] + g2[i];
  sgd_step(b, g, 0.5);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(Sample, DegenerateAndFrequencies) {
  Rng rng(10);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_categorical(std::vector<double>{1, 0}, rng), 0);
  std::vector<int> counts(4, 0);
  const int N = 100000;
  const std::vector<double> u(4, 0.25);
  for (int i = 0; i < N; ++i) ++counts[sample_categorical(u, rng)];
  for (int c : counts) EXPECT_NEAR(c / double(N), 0.25, 0.01);
  EXPECT_THROW(sample_categorical(std::vector<double>{1.2, -0.2}, rng), InputError);
  EXPECT_THROW(sample_categorical(std::vector<double>{0.3, 0.3}, rng), InputError);
}

TEST(Sample, SameSeedSameSequence) {
  Rng a(11), b(11);
  const std::vector<double> p = {0.1, 0.2, 0.3, 0.4};
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_categorical(p, a), sample_categorical(p, b));
}

TEST(DirectInit, GainsAndZeroBias) {
  const MlpShape shape({16, 8, 4});
  std::vector<double> p(shape.param_count(), 1.0);
  Rng rng(12);
  direct_init(shape, p, rng);
  MlpParams mp(shape);
  mp.flat = p;
  EXPECT_LT(gram_error(mp.weight(0), std::sqrt(2.0)), 1e-8);
  EXPECT_LT(gram_error(mp.weight(1), 1.0), 1e-8);
  for (double b : mp.bias(0)) EXPECT_EQ(b, 0.0);
  for (double b : mp.bias(1)) EXPECT_EQ(b, 0.0);
}

// Batched rows must reproduce the one-sample path for shared groups plus
// unit extras.
TEST(Batch, RowsMatchPerSample) {
  std::mt19937_64 rng(13);
  const std::size_t obs = 6, extra = 3;
  const MlpShape shape({obs + extra, 8, 4});
  const auto p = random_vec(shape.param_count(), rng, 0.5);

  SparseBatchInput in;
  in.reset(obs + extra);
  std::vector<std::vector<double>> dense;
  for (int g = 0; g < 5; ++g) {
    std::vector<double> v(obs, 0.0);
    v[rng() % obs] = 1.0;
    v[rng() % obs] = 1.0;
    const auto id = in.add_group(v);
    for (int e = -1; e < static_cast<int>(extra); ++e) {
      in.add_row(id, e < 0 ? -1 : static_cast<std::int32_t>(obs) + e);
      std::vector<double> full(obs + extra, 0.0);
      std::copy(v.begin(), v.end(), full.begin());
      if (e >= 0) full[obs + e] = 1.0;
      dense.push_back(full);
    }
  }
  BatchActivations acts;
  acts.resize(shape, in.rows());
  forward_rows(shape, p, in, RowRange{0, in.rows()}, acts);

  std::vector<double> dout(in.rows() * 4);
  std::vector<double> expect(shape.param_count(), 0.0);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    EXPECT_EQ(in.dense_row(r), dense[r]);
    ForwardCache c;
    const auto probs = forward(shape, p, dense[r], c);
    for (std::size_t a = 0; a < 4; ++a) EXPECT_NEAR(acts.row(1, r)[a], probs[a], 1e-14);
    const int action = static_cast<int>(rng() % 4);
    const double w = std::normal_distribution<double>(0, 1)(rng);
    for (std::size_t a = 0; a < 4; ++a) dout[r * 4 + a] = w * ((int)a == action ? 1.0 - probs[a] : -probs[a]);
    accumulate_logprob_gradient(shape, p, c, action, w, expect);
  }
  std::vector<double> got(shape.param_count(), 0.0);
  BatchScratch scratch;
  const std::vector<RowRange> ranges = {{0, in.rows()}};
  backward_rows(shape, p, in, acts, dout, ranges, got, scratch);
  EXPECT_LT(oracle::max_abs_diff(got, expect), 1e-12);
}
