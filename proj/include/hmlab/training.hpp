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

// REINFORCE on the repeated matrix games: on-policy batch collection,
// returns-to-go, gradient assembly and the SGD training loop.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmlab/game.hpp"
#include "hmlab/nn.hpp"
#include "hmlab/policy.hpp"

namespace hmlab {

struct TrainConfig {
  GameConfig game;
  VariantSpec variant;
  double lr = 0.01;
  int batch_size = 32;
  int total_steps = 10000;
  int eval_interval = 1000;
  int eval_episodes = 100;
  double gamma = 1.0;
  std::uint64_t seed = 0;

  // Diagnostics are measured over the last `diag_window` updates before each
  // eval point.
  bool diagnostics = true;
  int diag_window = 50;

  void validate() const;
};

// Trajectories of one batch. Every agent sees the same observation, so it is
// stored once per (episode, step).
struct Batch {
  int episodes = 0;
  int horizon = 0;
  int n_agents = 0;
  int obs_dim = 0;
  std::vector<double> obs;       // [episode][t][obs_dim]
  std::vector<int> actions;      // [episode][t][agent]
  std::vector<double> logprobs;  // [episode][t][agent]
  std::vector<double> rewards;   // [episode][t][agent]

  std::size_t index(int e, int t, int agent) const {
    return (static_cast<std::size_t>(e) * horizon + t) * n_agents + agent;
  }
  std::span<const double> observation(int e, int t) const {
    return {obs.data() + (static_cast<std::size_t>(e) * horizon + t) * obs_dim,
            static_cast<std::size_t>(obs_dim)};
  }
  double mean_reward() const;
};

// Collects batches with all episodes advancing in lock-step, so every step
// is one minibatch forward pass, and keeps the activations for the gradient
// of the batch it produced last. Not thread-safe.
class BatchEngine {
 public:
  explicit BatchEngine(const Policy& policy);

  // Call after the policy's parameters change.
  void refresh();
  const Policy& policy() const { return *policy_; }

  Batch collect(const GameConfig& game, int batch_size, Rng& rng);

  // Same result as accumulate_policy_gradient(). `batch` must be the last
  // batch returned by collect(), with parameters unchanged since.
  void accumulate_gradient(const Batch& batch, double gamma,
                           std::span<const std::span<double>> sinks);

 private:
  bool per_agent_params() const;
  std::int32_t extra_input(int agent) const;

  const Policy* policy_;
  PolicyEvaluator evaluator_;
  bool batched_;
  // FuPS: every agent evaluates the same network on the same input, so one
  // row per (step, episode) serves all agents.
  bool shared_rows_;
  bool have_batch_ = false;
  SparseBatchInput input_;
  BatchActivations acts_;
  BatchScratch scratch_;
  std::vector<double> dout_;
  std::vector<double> dtheta_;
};

Batch collect_batch(const GameConfig& game, const Policy& policy, int batch_size, Rng& rng);

// rewards laid out [t][agent]; returns the same layout.
std::vector<double> returns_to_go(std::span<const double> rewards, int horizon, int n_agents,
                                  double gamma);

// Adds (1/B) sum_e sum_t G_t^i grad log pi(a_t^i | .) into sinks[i], one
// sample at a time. Reference path; the trainer uses BatchEngine.
void accumulate_policy_gradient(const Batch& batch, PolicyEvaluator& evaluator, double gamma,
                                std::span<const std::span<double>> sinks,
                                GradientPath path = GradientPath::kDecoupled);

// Ascent direction of the REINFORCE objective.
FlatGradient policy_gradient(const Batch& batch, const Policy& policy, double gamma);

enum class EvalMode { kSampled, kArgmax };

// Mean per-agent per-step reward over `episodes` rollouts.
double evaluate(const GameConfig& game, const Policy& policy, int episodes, Rng& rng,
                EvalMode mode = EvalMode::kSampled);

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct EvalRecord {
  int update = 0;
  double train_reward_mean = kMissing;
  double eval_reward_sampled = kMissing;
  double eval_reward_argmax = kMissing;
  double grad_conflict_mean = kMissing;
  double grad_conflict_min = kMissing;
  int zero_norm_pairs = 0;
  double grad_variance_mean = kMissing;
  int window = 0;
  double embed_cos_distance = kMissing;
};

struct AbortInfo {
  int update = 0;
  std::string statistic;
};

struct TrainLog {
  std::vector<EvalRecord> curve;
  std::vector<double> train_reward;  // one entry per update
  std::optional<AbortInfo> abort;
  std::optional<Policy> final_policy;

  bool aborted() const { return abort.has_value(); }
};

TrainLog train(const TrainConfig& config);

// splitmix64 finaliser, used for all seed derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace hmlab
