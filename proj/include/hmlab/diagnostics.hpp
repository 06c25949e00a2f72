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

// Measurements on gradients and policies: per-agent gradient conflict,
// windowed gradient variance, and system neural diversity (SND) under the
// Jensen-Shannon distance or total variation.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hmlab/game.hpp"
#include "hmlab/nn.hpp"
#include "hmlab/policy.hpp"
#include "hmlab/training.hpp"

namespace hmlab {

// g^(i): gradient of agent i's own REINFORCE terms with respect to every
// trainable parameter. Sums to policy_gradient().
std::vector<FlatGradient> per_agent_gradients(const Batch& batch, const Policy& policy,
                                              double gamma);

struct ConflictReport {
  std::vector<double> cosines;  // unordered pairs (0,1), (0,2), ..., (n-2,n-1)
  double mean = 0.0;
  double min = 0.0;
  int zero_norm_pairs = 0;
  int update = -1;
};

ConflictReport gradient_conflict(std::span<const std::span<const double>> grads);
ConflictReport gradient_conflict(const std::vector<FlatGradient>& grads);

struct VarianceReport {
  int window = 0;
  double mean_variance = 0.0;
  int update = -1;
};

// Unbiased per-parameter variance across the window, averaged over
// parameters.
VarianceReport gradient_variance(std::span<const std::span<const double>> window);
VarianceReport gradient_variance(const std::vector<std::vector<double>>& window);

enum class LogBase { kTwo, kE };

double js_divergence(std::span<const double> p, std::span<const double> q,
                     LogBase base = LogBase::kTwo);
double jsd_distance(std::span<const double> p, std::span<const double> q,
                    LogBase base = LogBase::kTwo);
double tvd(std::span<const double> p, std::span<const double> q);

using ObservationSet = std::vector<std::vector<double>>;

// Rolls out `episodes` episodes with each policy and keeps every observation
// (t = 0 included), then subsamples uniformly without replacement to `cap`.
ObservationSet collect_observation_set(const GameConfig& game,
                                       const std::vector<const Policy*>& policies, int episodes,
                                       std::size_t cap, Rng& rng);

enum class Distance { kJSD, kTVD };
std::string to_string(Distance d);

struct SNDReport {
  Distance distance = Distance::kJSD;
  std::size_t observations = 0;
  double value = 0.0;
};

using PolicyFn = std::function<std::vector<double>(int agent, std::span<const double> obs)>;

SNDReport snd(int n_agents, const PolicyFn& policy, const ObservationSet& observations,
              Distance distance);
SNDReport snd(const Policy& policy, const ObservationSet& observations, Distance distance);

// Distribution schedule on which TVD stays flat while JSD moves.
struct DistanceRow {
  int step = 0;
  std::vector<double> p;
  std::vector<double> q;
  double tvd = 0.0;
  double jsd = 0.0;
};

std::vector<DistanceRow> distances_demo();

}  // namespace hmlab
