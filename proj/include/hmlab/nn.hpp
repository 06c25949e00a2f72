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

// Minimal dense feed-forward networks: linear layers with ReLU between them
// and either a softmax or a linear output, plus hand-derived reverse-mode
// gradients.
//
// Layout: layer k has a weight matrix of shape (in_k x out_k), row-major, and
// a bias of length out_k; the forward map is y = x^T W + b. All layers live in
// one flat parameter vector ordered layer by layer, weights before bias.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hmlab {

using Rng = std::mt19937_64;

struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// One contiguous block of a flat parameter vector.
struct ParamSegment {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
};

using ParamLayout = std::vector<ParamSegment>;

std::size_t layout_size(const ParamLayout& layout);

enum class OutputKind { kSoftmax, kLinear };

class MlpShape {
 public:
  MlpShape() = default;
  // dims = {input, hidden..., output}; at least two entries.
  explicit MlpShape(std::vector<std::size_t> dims, OutputKind output = OutputKind::kSoftmax);

  std::size_t num_layers() const { return dims_.size() - 1; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t in_dim(std::size_t layer) const { return dims_[layer]; }
  std::size_t out_dim(std::size_t layer) const { return dims_[layer + 1]; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  OutputKind output() const { return output_; }

  std::size_t param_count() const { return param_count_; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + dims_[layer] * dims_[layer + 1];
  }

  // Ordering descriptor; segment names are prefixed with `prefix`.
  ParamLayout layout(const std::string& prefix = "", std::size_t base_offset = 0) const;

  friend bool operator==(const MlpShape&, const MlpShape&) = default;

 private:
  std::vector<std::size_t> dims_;
  OutputKind output_ = OutputKind::kSoftmax;
  std::vector<std::size_t> offsets_;
  std::size_t param_count_ = 0;
};

// Owning parameter set for one network.
struct MlpParams {
  MlpShape shape;
  std::vector<double> flat;

  MlpParams() = default;
  explicit MlpParams(MlpShape s) : shape(std::move(s)), flat(shape.param_count(), 0.0) {}

  Tensor2 weight(std::size_t layer) const;
  std::span<const double> bias(std::size_t layer) const;
  std::span<double> weight_span(std::size_t layer);
  std::span<double> bias_span(std::size_t layer);
};

struct FlatGradient {
  std::vector<double> values;
  ParamLayout layout;
};

// Activations kept by forward() for the backward pass, plus scratch.
struct ForwardCache {
  std::vector<std::vector<double>> acts;  // acts[0] = input, acts[k] = output of layer k-1
  std::vector<double> probs;              // softmax output (softmax nets only)
  std::vector<double> dlogits;
  std::vector<double> delta;
  std::vector<double> delta_prev;
  std::vector<std::uint32_t> input_nz;  // indices of non-zero inputs

  std::span<const double> output() const { return acts.back(); }
};

// Runs the network. For softmax nets returns the action distribution, for
// linear nets the raw output. Throws InputError on shape mismatch or
// non-finite input.
std::span<const double> forward(const MlpShape& shape, std::span<const double> params,
                                std::span<const double> input, ForwardCache& cache);

// grad += scale * d(<dout, output>)/d(params), where `output` is the last
// layer's pre-softmax value. If `dinput` is non-empty it receives (overwrites)
// d(<dout, output>)/d(input) * scale.
void backward_accumulate(const MlpShape& shape, std::span<const double> params,
                         ForwardCache& cache, std::span<const double> dout, double scale,
                         std::span<double> grad, std::span<double> dinput = {});

// grad += weight * d log(probs[action]) / d(params) for a softmax net.
void accumulate_logprob_gradient(const MlpShape& shape, std::span<const double> params,
                                 ForwardCache& cache, int action, double weight,
                                 std::span<double> grad);

// Gradient of log probs[action] with respect to every parameter.
FlatGradient backward_logprob(const MlpShape& shape, std::span<const double> params,
                              ForwardCache& cache, int action);

// ---------------------------------------------------------------------------
// Minibatch evaluation for inputs made of one-hot blocks.
//
// Row r's input is the vector of group row_group[r] plus, when
// row_extra[r] >= 0, a unit entry at that index. Rows that share a group
// (e.g. several agents seeing the same observation) share the first-layer
// work.
struct SparseBatchInput {
  std::size_t input_dim = 0;
  std::vector<std::uint32_t> group_ptr = {0};
  std::vector<std::uint32_t> group_idx;
  std::vector<double> group_val;
  std::vector<std::uint32_t> row_group;
  std::vector<std::int32_t> row_extra;

  void reset(std::size_t dim);
  // Stores the non-zero entries of `dense` (size <= input_dim).
  std::uint32_t add_group(std::span<const double> dense);
  void add_row(std::uint32_t group, std::int32_t extra = -1);
  std::size_t rows() const { return row_group.size(); }
  std::size_t groups() const { return group_ptr.size() - 1; }
  std::vector<double> dense_row(std::size_t r) const;
};

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct BatchActivations {
  std::size_t rows = 0;
  // outputs[k] is rows x out_dim(k), row-major: ReLU output for hidden
  // layers, probabilities (softmax nets) or raw values for the last layer.
  std::vector<std::vector<double>> outputs;
  std::vector<double> group_pre;

  void resize(const MlpShape& shape, std::size_t n_rows);
  std::span<const double> row(std::size_t layer, std::size_t r) const;
};

struct BatchScratch {
  std::vector<double> delta;
  std::vector<double> delta_prev;
  std::vector<double> group_sum;
};

// Evaluates rows [range.begin, range.end) with one parameter set.
void forward_rows(const MlpShape& shape, std::span<const double> params,
                  const SparseBatchInput& input, RowRange range, BatchActivations& acts);

// grad += sum over rows r in `ranges` of d<dout_r, z_r>/d(params), where z_r
// is the last layer's pre-activation (logits). dout is rows x output_dim.
void backward_rows(const MlpShape& shape, std::span<const double> params,
                   const SparseBatchInput& input, const BatchActivations& acts,
                   std::span<const double> dout, std::span<const RowRange> ranges,
                   std::span<double> grad, BatchScratch& scratch);

// Max-subtracted softmax, in place.
void softmax_inplace(std::span<double> x);

// params <- params - lr * grad. Throws InputError on size mismatch.
void sgd_step(std::span<double> params, std::span<const double> grad, double lr);

int sample_categorical(std::span<const double> probs, Rng& rng);
int argmax(std::span<const double> values);

// Semi-orthogonal matrix scaled by gain (Gaussian matrix, QR, sign-fixed).
Tensor2 orthogonal_init(std::size_t rows, std::size_t cols, double gain, Rng& rng);

// i.i.d. U(-1/sqrt(rows), 1/sqrt(rows)); rows is the fan-in under this
// library's (in x out) weight layout.
Tensor2 fan_in_uniform_init(std::size_t rows, std::size_t cols, Rng& rng);

// Orthogonal weights (gain sqrt(2) on hidden layers, 1 on the output layer)
// and zero biases.
void direct_init(const MlpShape& shape, std::span<double> params, Rng& rng);

}  // namespace hmlab
