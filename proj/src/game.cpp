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

#include "hmlab/game.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "hmlab/errors.hpp"

namespace hmlab {

std::string to_string(GameKind kind) {
  return kind == GameKind::kSpecialisation ? "spec" : "sync";
}

GameKind parse_game_kind(const std::string& s) {
  if (s == "spec" || s == "specialisation" || s == "specialization") {
    return GameKind::kSpecialisation;
  }
  if (s == "sync" || s == "synchronisation" || s == "synchronization") {
    return GameKind::kSynchronisation;
  }
  throw ConfigError("unknown game kind '" + s + "'");
}

void GameConfig::validate() const {
  if (n_agents < 2) throw ConfigError("game needs at least 2 agents");
  if (n_actions < 2) throw ConfigError("game needs at least 2 actions");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
}

GameConfig make_game(GameKind kind, int n_agents, int horizon, bool temporal) {
  GameConfig c;
  c.kind = kind;
  c.n_agents = n_agents;
  c.n_actions = n_agents;
  c.horizon = horizon;
  c.temporal = temporal;
  return c;
}

double reward_for_count(GameKind kind, int n_agents, int k) {
  if (k < 1 || k > n_agents) throw InputError("action count out of range");
  if (kind == GameKind::kSpecialisation) return k == 1 ? 1.0 : 1.0 / k;
  return 1.0 / (n_agents - k + 1);
}

namespace {

void check_joint_action(const GameConfig& config, std::span<const int> a) {
  if (static_cast<int>(a.size()) != config.n_agents) {
    throw InputError("joint action length " + std::to_string(a.size()) + " != n_agents " +
                     std::to_string(config.n_agents));
  }
  for (int x : a) {
    if (x < 0 || x >= config.n_actions) {
      throw InputError("action index " + std::to_string(x) + " out of range");
    }
  }
}

}  // namespace

RewardVector payoff(const GameConfig& config, std::span<const int> joint_action) {
  check_joint_action(config, joint_action);
  std::vector<int> counts(config.n_actions, 0);
  for (int x : joint_action) ++counts[x];
  RewardVector r(joint_action.size());
  for (std::size_t i = 0; i < joint_action.size(); ++i) {
    r[i] = reward_for_count(config.kind, config.n_agents, counts[joint_action[i]]);
  }
  return r;
}

bool is_terminal(const GameConfig& config, const GameState& state) {
  return state.t >= config.episode_length();
}

std::pair<GameState, RewardVector> step(const GameConfig& config, const GameState& state,
                                        std::span<const int> joint_action) {
  if (is_terminal(config, state)) throw StateError("step called on a terminal state");
  RewardVector r = payoff(config, joint_action);
  GameState next;
  next.prev_joint_action = JointAction(joint_action.begin(), joint_action.end());
  next.t = state.t + 1;
  return {std::move(next), std::move(r)};
}

void encode_observation_into(const GameConfig& config, const GameState& state,
                             std::span<double> out) {
  if (static_cast<int>(out.size()) != config.obs_dim()) {
    throw InputError("observation buffer has wrong size");
  }
  std::fill(out.begin(), out.end(), 0.0);
  if (!config.temporal || !state.prev_joint_action) return;
  const JointAction& prev = *state.prev_joint_action;
  for (int j = 0; j < config.n_agents; ++j) out[j * config.n_actions + prev[j]] = 1.0;
}

std::vector<double> encode_observation(const GameConfig& config, const GameState& state,
                                       int agent) {
  if (agent < 0 || agent >= config.n_agents) throw InputError("agent index out of range");
  std::vector<double> obs(config.obs_dim());
  encode_observation_into(config, state, obs);
  return obs;
}

bool is_pure_nash(const GameConfig& config, std::span<const int> joint_action) {
  const RewardVector base = payoff(config, joint_action);
  JointAction deviated(joint_action.begin(), joint_action.end());
  for (int i = 0; i < config.n_agents; ++i) {
    const int own = deviated[i];
    for (int b = 0; b < config.n_actions; ++b) {
      if (b == own) continue;
      deviated[i] = b;
      const bool better = payoff(config, deviated)[i] > base[i];
      deviated[i] = own;
      if (better) return false;
    }
  }
  return true;
}

double shared_policy_expected_return(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in [0, 1]");
  const double d = alpha - 0.5;
  return -d * d + 0.75;
}

std::vector<double> brute_force_expected_reward(
    const GameConfig& config, const std::vector<std::vector<double>>& distributions) {
  config.validate();
  const int n = config.n_agents;
  const int A = config.n_actions;
  if (static_cast<int>(distributions.size()) != n) {
    throw InputError("need one action distribution per agent");
  }
  for (const auto& d : distributions) {
    if (static_cast<int>(d.size()) != A) throw InputError("distribution has wrong support size");
    double s = 0.0;
    for (double p : d) {
      if (!(p >= 0.0)) throw InputError("negative or NaN probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw InputError("distribution does not sum to 1");
  }
  std::uint64_t outcomes = 1;
  for (int i = 0; i < n; ++i) {
    outcomes *= static_cast<std::uint64_t>(A);
    if (outcomes > kEnumerationBudget) {
      throw CapacityError("joint action space exceeds the enumeration budget");
    }
  }

  std::vector<double> expected(n, 0.0);
  JointAction a(n, 0);
  for (std::uint64_t o = 0; o < outcomes; ++o) {
    double prob = 1.0;
    for (int i = 0; i < n; ++i) prob *= distributions[i][a[i]];
    if (prob != 0.0) {
      const RewardVector r = payoff(config, a);
      for (int i = 0; i < n; ++i) expected[i] += prob * r[i];
    }
    for (int i = n - 1; i >= 0; --i) {
      if (++a[i] < A) break;
      a[i] = 0;
    }
  }
  return expected;
}

}  // namespace hmlab
