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

#include "hmlab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "hmlab/errors.hpp"
#include "hmlab/simd.hpp"

namespace hmlab {

std::size_t layout_size(const ParamLayout& layout) {
  std::size_t n = 0;
  for (const auto& s : layout) n += s.size();
  return n;
}

MlpShape::MlpShape(std::vector<std::size_t> dims, OutputKind output)
    : dims_(std::move(dims)), output_(output) {
  if (dims_.size() < 2) throw InputError("an MLP needs at least one layer");
  for (std::size_t d : dims_) {
    if (d == 0) throw InputError("MLP layer widths must be positive");
  }
  offsets_.reserve(num_layers());
  std::size_t off = 0;
  for (std::size_t k = 0; k < num_layers(); ++k) {
    offsets_.push_back(off);
    off += dims_[k] * dims_[k + 1] + dims_[k + 1];
  }
  param_count_ = off;
}

ParamLayout MlpShape::layout(const std::string& prefix, std::size_t base_offset) const {
  ParamLayout out;
  for (std::size_t k = 0; k < num_layers(); ++k) {
    const std::string name = prefix + "layer" + std::to_string(k);
    out.push_back({name + ".weight", in_dim(k), out_dim(k), base_offset + weight_offset(k)});
    out.push_back({name + ".bias", 1, out_dim(k), base_offset + bias_offset(k)});
  }
  return out;
}

Tensor2 MlpParams::weight(std::size_t layer) const {
  Tensor2 w(shape.in_dim(layer), shape.out_dim(layer));
  const auto* src = flat.data() + shape.weight_offset(layer);
  std::copy(src, src + w.data.size(), w.data.begin());
  return w;
}

std::span<const double> MlpParams::bias(std::size_t layer) const {
  return {flat.data() + shape.bias_offset(layer), shape.out_dim(layer)};
}

std::span<double> MlpParams::weight_span(std::size_t layer) {
  return {flat.data() + shape.weight_offset(layer), shape.in_dim(layer) * shape.out_dim(layer)};
}

std::span<double> MlpParams::bias_span(std::size_t layer) {
  return {flat.data() + shape.bias_offset(layer), shape.out_dim(layer)};
}

void softmax_inplace(std::span<double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double& v : x) {
    v = std::exp(v - m);
    z += v;
  }
  const double inv = 1.0 / z;
  for (double& v : x) v *= inv;
}

std::span<const double> forward(const MlpShape& shape, std::span<const double> params,
                                std::span<const double> input, ForwardCache& cache) {
  if (input.size() != shape.input_dim()) {
    throw InputError("forward: input has " + std::to_string(input.size()) +
                     " entries, network expects " + std::to_string(shape.input_dim()));
  }
  if (params.size() != shape.param_count()) throw InputError("forward: parameter size mismatch");
  // Inputs are mostly one-hot blocks; only the non-zero entries are touched.
  cache.input_nz.clear();
  for (std::size_t j = 0; j < input.size(); ++j) {
    if (input[j] != 0.0) {
      if (!std::isfinite(input[j])) throw InputError("forward: non-finite input");
      cache.input_nz.push_back(static_cast<std::uint32_t>(j));
    }
  }

  const std::size_t L = shape.num_layers();
  cache.acts.resize(L + 1);
  cache.acts[0].assign(input.begin(), input.end());
  for (std::size_t k = 0; k < L; ++k) {
    const std::size_t in = shape.in_dim(k);
    const std::size_t out = shape.out_dim(k);
    const double* W = params.data() + shape.weight_offset(k);
    const double* b = params.data() + shape.bias_offset(k);
    const std::vector<double>& x = cache.acts[k];
    std::vector<double>& y = cache.acts[k + 1];
    y.assign(b, b + out);
    if (k == 0) {
      for (std::uint32_t j : cache.input_nz) simd::axpy(x[j], {W + j * out, out}, y);
    } else {
      for (std::size_t j = 0; j < in; ++j) {
        if (x[j] != 0.0) simd::axpy(x[j], {W + j * out, out}, y);
      }
    }
    if (k + 1 < L) simd::relu(y);
  }

  if (shape.output() == OutputKind::kLinear) return cache.acts[L];
  cache.probs = cache.acts[L];
  softmax_inplace(cache.probs);
  return cache.probs;
}

void backward_accumulate(const MlpShape& shape, std::span<const double> params,
                         ForwardCache& cache, std::span<const double> dout, double scale,
                         std::span<double> grad, std::span<double> dinput) {
  const std::size_t L = shape.num_layers();
  if (cache.acts.size() != L + 1) throw InputError("backward: cache does not match network");
  if (dout.size() != shape.output_dim()) throw InputError("backward: output gradient size mismatch");
  if (grad.size() != shape.param_count()) throw InputError("backward: gradient size mismatch");
  if (!dinput.empty() && dinput.size() != shape.input_dim()) {
    throw InputError("backward: input gradient size mismatch");
  }

  cache.delta.assign(dout.begin(), dout.end());
  if (scale != 1.0) simd::scale(scale, cache.delta);

  for (std::size_t k = L; k-- > 0;) {
    const std::size_t in = shape.in_dim(k);
    const std::size_t out = shape.out_dim(k);
    const double* W = params.data() + shape.weight_offset(k);
    double* gW = grad.data() + shape.weight_offset(k);
    double* gb = grad.data() + shape.bias_offset(k);
    const std::vector<double>& x = cache.acts[k];
    const std::span<const double> delta(cache.delta);

    simd::axpy(1.0, delta, {gb, out});
    if (k == 0) {
      for (std::uint32_t j : cache.input_nz) simd::axpy(x[j], delta, {gW + j * out, out});
    } else {
      for (std::size_t j = 0; j < in; ++j) {
        if (x[j] != 0.0) simd::axpy(x[j], delta, {gW + j * out, out});
      }
    }

    if (k > 0) {
      // x holds ReLU outputs; the subgradient at 0 is 0.
      cache.delta_prev.assign(in, 0.0);
      for (std::size_t j = 0; j < in; ++j) {
        if (x[j] > 0.0) cache.delta_prev[j] = simd::dot({W + j * out, out}, delta);
      }
      std::swap(cache.delta, cache.delta_prev);
    } else if (!dinput.empty()) {
      for (std::size_t j = 0; j < in; ++j) dinput[j] = simd::dot({W + j * out, out}, delta);
    }
  }
}

void accumulate_logprob_gradient(const MlpShape& shape, std::span<const double> params,
                                 ForwardCache& cache, int action, double weight,
                                 std::span<double> grad) {
  if (shape.output() != OutputKind::kSoftmax) throw InputError("log-prob of a non-softmax net");
  if (action < 0 || static_cast<std::size_t>(action) >= shape.output_dim()) {
    throw InputError("action index out of range");
  }
  cache.dlogits.resize(cache.probs.size());
  for (std::size_t a = 0; a < cache.probs.size(); ++a) cache.dlogits[a] = -cache.probs[a];
  cache.dlogits[action] += 1.0;
  backward_accumulate(shape, params, cache, cache.dlogits, weight, grad);
}

FlatGradient backward_logprob(const MlpShape& shape, std::span<const double> params,
                              ForwardCache& cache, int action) {
  FlatGradient g;
  g.values.assign(shape.param_count(), 0.0);
  g.layout = shape.layout();
  accumulate_logprob_gradient(shape, params, cache, action, 1.0, g.values);
  return g;
}

void sgd_step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != grad.size()) {
    throw InputError("sgd_step: gradient has " + std::to_string(grad.size()) +
                     " entries, parameters have " + std::to_string(params.size()));
  }
  if (lr == 0.0) return;
  simd::axpy(-lr, grad, params);
}

void SparseBatchInput::reset(std::size_t dim) {
  input_dim = dim;
  group_ptr.assign(1, 0);
  group_idx.clear();
  group_val.clear();
  row_group.clear();
  row_extra.clear();
}

std::uint32_t SparseBatchInput::add_group(std::span<const double> dense) {
  if (dense.size() > input_dim) throw InputError("group vector longer than the input");
  for (std::size_t j = 0; j < dense.size(); ++j) {
    if (dense[j] != 0.0) {
      if (!std::isfinite(dense[j])) throw InputError("non-finite input");
      group_idx.push_back(static_cast<std::uint32_t>(j));
      group_val.push_back(dense[j]);
    }
  }
  group_ptr.push_back(static_cast<std::uint32_t>(group_idx.size()));
  return static_cast<std::uint32_t>(groups() - 1);
}

void SparseBatchInput::add_row(std::uint32_t group, std::int32_t extra) {
  if (group >= groups()) throw InputError("row refers to an unknown group");
  if (extra >= static_cast<std::int32_t>(input_dim)) throw InputError("extra index out of range");
  row_group.push_back(group);
  row_extra.push_back(extra);
}

std::vector<double> SparseBatchInput::dense_row(std::size_t r) const {
  std::vector<double> x(input_dim, 0.0);
  const std::uint32_t g = row_group.at(r);
  for (std::uint32_t p = group_ptr[g]; p < group_ptr[g + 1]; ++p) x[group_idx[p]] += group_val[p];
  if (row_extra[r] >= 0) x[row_extra[r]] += 1.0;
  return x;
}

void BatchActivations::resize(const MlpShape& shape, std::size_t n_rows) {
  rows = n_rows;
  outputs.resize(shape.num_layers());
  for (std::size_t k = 0; k < shape.num_layers(); ++k) outputs[k].resize(n_rows * shape.out_dim(k));
}

std::span<const double> BatchActivations::row(std::size_t layer, std::size_t r) const {
  const std::size_t w = outputs[layer].size() / rows;
  return {outputs[layer].data() + r * w, w};
}

namespace {

std::pair<std::uint32_t, std::uint32_t> group_span(const SparseBatchInput& input, RowRange range) {
  std::uint32_t lo = UINT32_MAX;
  std::uint32_t hi = 0;
  for (std::size_t r = range.begin; r < range.end; ++r) {
    lo = std::min(lo, input.row_group[r]);
    hi = std::max(hi, input.row_group[r]);
  }
  return {lo, hi + 1};
}

void check_batch(const MlpShape& shape, std::span<const double> params,
                 const SparseBatchInput& input, const BatchActivations& acts, RowRange range) {
  if (params.size() != shape.param_count()) throw InputError("batch: parameter size mismatch");
  if (input.input_dim != shape.input_dim()) throw InputError("batch: input width mismatch");
  if (acts.rows < input.rows() || acts.outputs.size() != shape.num_layers()) {
    throw InputError("batch: activations not sized for this input");
  }
  if (range.begin > range.end || range.end > input.rows()) throw InputError("batch: bad row range");
}

}  // namespace

void forward_rows(const MlpShape& shape, std::span<const double> params,
                  const SparseBatchInput& input, RowRange range, BatchActivations& acts) {
  check_batch(shape, params, input, acts, range);
  const std::size_t m = range.end - range.begin;
  if (m == 0) return;
  const auto& K = simd::active_kernels();
  const std::size_t L = shape.num_layers();

  const std::size_t out0 = shape.out_dim(0);
  const double* W0 = params.data() + shape.weight_offset(0);
  const double* b0 = params.data() + shape.bias_offset(0);
  const auto [g0, g1] = group_span(input, range);
  acts.group_pre.resize((g1 - g0) * out0);
  for (std::uint32_t g = g0; g < g1; ++g) {
    double* y = acts.group_pre.data() + (g - g0) * out0;
    std::copy(b0, b0 + out0, y);
    for (std::uint32_t p = input.group_ptr[g]; p < input.group_ptr[g + 1]; ++p) {
      K.axpy(input.group_val[p], W0 + input.group_idx[p] * out0, y, out0);
    }
  }
  for (std::size_t r = range.begin; r < range.end; ++r) {
    double* y = acts.outputs[0].data() + r * out0;
    const double* src = acts.group_pre.data() + (input.row_group[r] - g0) * out0;
    std::copy(src, src + out0, y);
    if (input.row_extra[r] >= 0) K.axpy(1.0, W0 + input.row_extra[r] * out0, y, out0);
  }
  if (L > 1) K.relu(acts.outputs[0].data() + range.begin * out0, m * out0);

  for (std::size_t k = 1; k < L; ++k) {
    const std::size_t in = shape.in_dim(k);
    const std::size_t out = shape.out_dim(k);
    const double* W = params.data() + shape.weight_offset(k);
    const double* b = params.data() + shape.bias_offset(k);
    double* Y = acts.outputs[k].data() + range.begin * out;
    for (std::size_t r = 0; r < m; ++r) std::copy(b, b + out, Y + r * out);
    K.gemm_nn(m, in, out, acts.outputs[k - 1].data() + range.begin * in, in, W, out, Y, out);
    if (k + 1 < L) K.relu(Y, m * out);
  }

  if (shape.output() == OutputKind::kSoftmax) {
    const std::size_t A = shape.output_dim();
    double* Y = acts.outputs[L - 1].data() + range.begin * A;
    for (std::size_t r = 0; r < m; ++r) softmax_inplace({Y + r * A, A});
  }
}

void backward_rows(const MlpShape& shape, std::span<const double> params,
                   const SparseBatchInput& input, const BatchActivations& acts,
                   std::span<const double> dout, std::span<const RowRange> ranges,
                   std::span<double> grad, BatchScratch& scratch) {
  if (grad.size() != shape.param_count()) throw InputError("batch: gradient size mismatch");
  if (dout.size() < input.rows() * shape.output_dim()) {
    throw InputError("batch: output gradient size mismatch");
  }
  const auto& K = simd::active_kernels();
  const std::size_t L = shape.num_layers();

  for (const RowRange range : ranges) {
    check_batch(shape, params, input, acts, range);
    const std::size_t m = range.end - range.begin;
    if (m == 0) continue;
    const std::size_t A = shape.output_dim();
    scratch.delta.assign(dout.begin() + range.begin * A, dout.begin() + range.end * A);

    for (std::size_t k = L; k-- > 0;) {
      const std::size_t in = shape.in_dim(k);
      const std::size_t out = shape.out_dim(k);
      const double* W = params.data() + shape.weight_offset(k);
      double* gW = grad.data() + shape.weight_offset(k);
      double* gb = grad.data() + shape.bias_offset(k);
      const double* delta = scratch.delta.data();

      for (std::size_t r = 0; r < m; ++r) K.axpy(1.0, delta + r * out, gb, out);
      if (k > 0) {
        const double* X = acts.outputs[k - 1].data() + range.begin * in;
        K.gemm_tn(m, in, out, X, in, delta, out, gW, out);
        scratch.delta_prev.resize(m * in);
        K.gemm_nt(m, in, out, delta, out, W, out, scratch.delta_prev.data(), in);
        // X holds ReLU outputs; the subgradient at 0 is 0.
        for (std::size_t q = 0; q < m * in; ++q) {
          if (!(X[q] > 0.0)) scratch.delta_prev[q] = 0.0;
        }
        std::swap(scratch.delta, scratch.delta_prev);
        continue;
      }
      const auto [g0, g1] = group_span(input, range);
      scratch.group_sum.assign((g1 - g0) * out, 0.0);
      for (std::size_t r = 0; r < m; ++r) {
        const std::size_t row = range.begin + r;
        K.axpy(1.0, delta + r * out, scratch.group_sum.data() + (input.row_group[row] - g0) * out,
               out);
        if (input.row_extra[row] >= 0) K.axpy(1.0, delta + r * out, gW + input.row_extra[row] * out, out);
      }
      for (std::uint32_t g = g0; g < g1; ++g) {
        const double* sg = scratch.group_sum.data() + (g - g0) * out;
        for (std::uint32_t p = input.group_ptr[g]; p < input.group_ptr[g + 1]; ++p) {
          K.axpy(input.group_val[p], sg, gW + input.group_idx[p] * out, out);
        }
      }
    }
  }
}

int sample_categorical(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw InputError("empty distribution");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw InputError("distribution has a negative or NaN entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("distribution does not sum to 1");

  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cum = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = static_cast<int>(i);
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return last_positive;
}

int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

Tensor2 orthogonal_init(std::size_t rows, std::size_t cols, double gain, Rng& rng) {
  if (rows == 0 || cols == 0) throw InputError("orthogonal_init: empty shape");
  const std::size_t big = std::max(rows, cols);
  const std::size_t small = std::min(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(big, small);
  for (std::size_t r = 0; r < big; ++r) {
    for (std::size_t c = 0; c < small; ++c) g(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
  const Eigen::VectorXd diag = qr.matrixQR().diagonal();
  for (std::size_t c = 0; c < small; ++c) {
    if (diag(c) < 0.0) q.col(c) *= -1.0;
  }

  Tensor2 w(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      w(r, c) = gain * (rows >= cols ? q(r, c) : q(c, r));
    }
  }
  return w;
}

Tensor2 fan_in_uniform_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw InputError("fan_in_uniform_init: empty shape");
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor2 w(rows, cols);
  for (double& v : w.data) v = u(rng);
  return w;
}

void direct_init(const MlpShape& shape, std::span<double> params, Rng& rng) {
  if (params.size() != shape.param_count()) throw InputError("direct_init: size mismatch");
  const std::size_t L = shape.num_layers();
  for (std::size_t k = 0; k < L; ++k) {
    const double gain = k + 1 < L ? std::sqrt(2.0) : 1.0;
    const Tensor2 w = orthogonal_init(shape.in_dim(k), shape.out_dim(k), gain, rng);
    std::copy(w.data.begin(), w.data.end(), params.begin() + shape.weight_offset(k));
    std::fill_n(params.begin() + shape.bias_offset(k), shape.out_dim(k), 0.0);
  }
}

}  // namespace hmlab
