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

// Multi-agent policy architectures.
//
//   NoPS                 one action network per agent
//   FuPS                 one shared network, input = observation
//   FuPSID               shared network, input = observation ++ one-hot id
//   FuPSIDNoState        shared network, input = one-hot id only
//   HyperLinear          theta_i = row_i(W) + b  (fixed one-hot contexts)
//   HyperMLP             theta_i = head(relu(trunk(e_i))), learned embeddings e_i
//   HyperMLPNoDecouple   theta_i,o = head(relu(trunk([o, e_i]))), i.e. the
//                        hypernetwork also sees the observation
//
// Every trainable parameter of a policy lives in one flat vector. For the
// hypernetwork variants the hypernetwork layers come first, then (when
// trainable) the n x embed_dim embedding matrix.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hmlab/game.hpp"
#include "hmlab/nn.hpp"

namespace hmlab {

enum class VariantKind {
  kNoPS,
  kFuPS,
  kFuPSID,
  kFuPSIDNoState,
  kHyperLinear,
  kHyperMLP,
  kHyperMLPNoDecouple,
};

std::string to_string(VariantKind kind);
VariantKind parse_variant_kind(const std::string& s);
bool is_hyper(VariantKind kind);

struct VariantSpec {
  VariantKind kind = VariantKind::kFuPS;
  int hidden_dim = 8;
  // Hypernetwork variants only. 0 selects n_agents. HyperLinear always uses
  // n_agents (one-hot contexts).
  int embed_dim = 0;
  int hyper_hidden_dim = 64;
  bool reset_fan_init = true;
  // Scale applied to the MLP hypernetwork head weights under reset-fan init.
  double head_scale = 0.1;
};

// Widths that reproduce the published parameter-count table: NoPS uses 4
// hidden units per agent, every shared or generated network uses 4 * n.
VariantSpec default_variant(VariantKind kind, int n_agents);

struct PolicyDims {
  int n_agents = 2;
  int n_actions = 2;
  int obs_dim = 4;
};

PolicyDims dims_for(const GameConfig& game);

std::size_t count_params(const VariantSpec& variant, const PolicyDims& dims);

// One policy-gradient term: weight * grad log pi_agent(action | obs).
struct WeightedSample {
  int agent = 0;
  std::span<const double> obs;
  int action = 0;
  double weight = 1.0;
};

class Policy {
 public:
  // Throws ConfigError for inconsistent specs (e.g. embed_dim < n_agents).
  static Policy build(const VariantSpec& variant, const PolicyDims& dims, Rng& rng);

  const VariantSpec& variant() const { return variant_; }
  VariantKind kind() const { return variant_.kind; }
  const PolicyDims& dims() const { return dims_; }
  int n_agents() const { return dims_.n_agents; }

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  std::size_t num_params() const { return params_.size(); }

  // Per-agent action network (the generated network for hyper variants).
  const MlpShape& target_shape() const { return target_; }
  // Hypernetwork; only meaningful for hyper variants.
  const MlpShape& hyper_shape() const { return hyper_; }

  ParamLayout layout() const;

  int embed_dim() const { return embed_dim_; }
  bool embeddings_trainable() const;
  // Row `agent` of the embedding matrix (one-hot for HyperLinear).
  std::span<const double> embedding(int agent) const;
  Tensor2 embeddings() const;

  // Input of the action network for this agent.
  void build_target_input(int agent, std::span<const double> obs, std::span<double> out) const;
  // Input of the hypernetwork for this agent (obs used by NoDecouple only).
  void build_hyper_input(int agent, std::span<const double> obs, std::span<double> out) const;

  std::size_t embed_offset() const { return embed_offset_; }

  // Checkpoint support: replaces every trainable parameter.
  void set_params(std::span<const double> values);

 private:
  Policy() = default;
  friend struct PolicyShapes;

  VariantSpec variant_;
  PolicyDims dims_;
  MlpShape target_;
  MlpShape hyper_;
  int embed_dim_ = 0;
  std::size_t embed_offset_ = 0;
  std::vector<double> params_;
  std::vector<double> fixed_embeddings_;
};

// Parameters of one agent's action network. Throws VariantError on
// non-hypernetwork variants; HyperMLPNoDecouple needs the observation.
MlpParams generate_agent_params(const Policy& policy, int agent);
MlpParams generate_agent_params(const Policy& policy, int agent, std::span<const double> obs);

std::vector<double> action_distribution(const Policy& policy, int agent,
                                        std::span<const double> obs);

// d log pi_agent(action | obs) / d(all trainable parameters), by the direct
// chain rule through parameter generation.
FlatGradient logprob_gradient(const Policy& policy, int agent, std::span<const double> obs,
                              int action);

// sum_i J_i^T Z_i: per-agent weighted action-network gradients are summed
// first, then pulled back once through the hypernetwork. For NoDecouple the
// grouping key is (agent, observation). Throws VariantError on non-hyper
// variants.
FlatGradient decoupled_gradient(const Policy& policy, std::span<const WeightedSample> samples);

// sum_s weight_s * logprob_gradient(s), one sample at a time.
FlatGradient direct_gradient(const Policy& policy, std::span<const WeightedSample> samples);

struct EmbeddingDistance {
  double value = 0.0;
  int skipped_pairs = 0;
};

// Mean over unordered pairs of (1 - cosine similarity). Zero-norm rows are
// skipped and counted; NumericError if no pair is usable.
EmbeddingDistance embedding_cosine_distance(const Tensor2& embeddings);
EmbeddingDistance embedding_cosine_distance(const Policy& policy);

enum class GradientPath { kDecoupled, kDirect };

// Evaluates a fixed parameter snapshot efficiently: per-agent action
// networks are materialised once (hyper variants) and reused until
// refresh(). Not thread-safe; use one per thread.
class PolicyEvaluator {
 public:
  explicit PolicyEvaluator(const Policy& policy);

  // Call after the policy's parameters change.
  void refresh();

  const Policy& policy() const { return *policy_; }

  // Action distribution; the returned span is valid until the next call
  // with the same cache slot.
  std::span<const double> distribution(int agent, std::span<const double> obs,
                                       ForwardCache& cache);

  // Adds sum_s weight_s * grad log pi into sinks[agent_s]. `sinks` has one
  // entry per agent, each spanning the full parameter vector; entries may
  // alias.
  void accumulate(std::span<const WeightedSample> samples,
                  std::span<const std::span<double>> sinks,
                  GradientPath path = GradientPath::kDecoupled);

  // Parameters of the action network used for (agent, obs).
  std::span<const double> agent_params(int agent, std::span<const double> obs);

  // sink += J^T dtheta, J the Jacobian of the generated parameters of
  // (agent, obs) with respect to every trainable parameter. Hyper variants.
  void pull_back(int agent, std::span<const double> obs, std::span<const double> dtheta,
                 std::span<double> sink);

 private:
  void accumulate_shared(std::span<const WeightedSample> samples,
                         std::span<const std::span<double>> sinks);
  void accumulate_hyper_direct(std::span<const WeightedSample> samples,
                               std::span<const std::span<double>> sinks);
  void accumulate_hyper_decoupled(std::span<const WeightedSample> samples,
                                  std::span<const std::span<double>> sinks);
  std::span<const double> target_input(int agent, std::span<const double> obs);

  const Policy* policy_;
  std::vector<std::vector<double>> generated_;
  std::vector<char> generated_valid_;
  std::vector<std::map<std::vector<double>, std::vector<double>>> per_obs_generated_;
  std::vector<double> input_buf_;
  std::vector<double> hyper_input_buf_;
  std::vector<double> dinput_buf_;
  std::vector<double> dtheta_buf_;
  ForwardCache scratch_;
  ForwardCache hyper_cache_;
};

}  // namespace hmlab
