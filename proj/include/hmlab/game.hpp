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

// Specialisation and Synchronisation games: N-player payoffs, the repeated
// (temporal) extension whose state is the previous joint action, and exact
// enumeration helpers used as test oracles.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hmlab {

enum class GameKind { kSpecialisation, kSynchronisation };

std::string to_string(GameKind kind);
GameKind parse_game_kind(const std::string& s);

struct GameConfig {
  GameKind kind = GameKind::kSpecialisation;
  int n_agents = 2;
  int n_actions = 2;
  int horizon = 10;
  bool temporal = true;

  // Episode length actually used: 1 for the normal-form game.
  int episode_length() const { return temporal ? horizon : 1; }
  int obs_dim() const { return n_agents * n_actions; }

  // Throws ConfigError.
  void validate() const;
};

// n agents, n actions, 10-step temporal episodes.
GameConfig make_game(GameKind kind, int n_agents, int horizon = 10, bool temporal = true);

using JointAction = std::vector<int>;
using RewardVector = std::vector<double>;

struct GameState {
  std::optional<JointAction> prev_joint_action;
  int t = 0;
};

// Payoff of an agent whose action is shared by `k` agents (k >= 1).
double reward_for_count(GameKind kind, int n_agents, int k);

RewardVector payoff(const GameConfig& config, std::span<const int> joint_action);

std::pair<GameState, RewardVector> step(const GameConfig& config, const GameState& state,
                                        std::span<const int> joint_action);

bool is_terminal(const GameConfig& config, const GameState& state);

// Concatenated one-hot blocks of the previous joint action; zeros at t = 0.
// Every agent receives the same vector.
std::vector<double> encode_observation(const GameConfig& config, const GameState& state,
                                       int agent);
void encode_observation_into(const GameConfig& config, const GameState& state,
                             std::span<double> out);

bool is_pure_nash(const GameConfig& config, std::span<const int> joint_action);

// Two-player Specialisation game, both agents sharing P(a = 0) = alpha.
double shared_policy_expected_return(double alpha);

inline constexpr std::uint64_t kEnumerationBudget = 1'000'000;

// Exact per-agent expected reward of independent per-agent action
// distributions, by enumerating every joint action.
std::vector<double> brute_force_expected_reward(
    const GameConfig& config, const std::vector<std::vector<double>>& distributions);

}  // namespace hmlab
