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

#include "hmlab/training.hpp"

#include <algorithm>
#include <cmath>

#include "hmlab/diagnostics.hpp"
#include "hmlab/errors.hpp"
#include "hmlab/simd.hpp"

namespace hmlab {

void TrainConfig::validate() const {
  game.validate();
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (total_steps < 0) throw ConfigError("total_steps must be >= 0");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (diag_window < 2) throw ConfigError("diag_window must be >= 2");
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Batch::mean_reward() const {
  if (rewards.empty()) return kMissing;
  double s = 0.0;
  for (double r : rewards) s += r;
  return s / static_cast<double>(rewards.size());
}

namespace {

void check_dims(const GameConfig& game, const Policy& policy) {
  const PolicyDims d = dims_for(game);
  if (policy.dims().n_agents != d.n_agents || policy.dims().n_actions != d.n_actions ||
      policy.dims().obs_dim != d.obs_dim) {
    throw InputError("policy dimensions do not match the game");
  }
}

// Runs episodes, calling pick(probs) once per agent in index order. Distributions
// that cannot differ between agents or steps are computed once.
template <typename Pick, typename Visit>
void rollout(const GameConfig& game, PolicyEvaluator& ev, int episodes, std::vector<double>& obs,
             Pick&& pick, Visit&& visit) {
  const Policy& policy = ev.policy();
  const int n = game.n_agents;
  const int T = game.episode_length();
  const bool one_per_step = policy.kind() == VariantKind::kFuPS;
  const bool obs_free = policy.kind() == VariantKind::kFuPSIDNoState;

  ForwardCache cache;
  std::vector<std::vector<double>> fixed;
  if (obs_free) {
    obs.assign(game.obs_dim(), 0.0);
    for (int i = 0; i < n; ++i) {
      const auto p = ev.distribution(i, obs, cache);
      fixed.emplace_back(p.begin(), p.end());
    }
  }

  JointAction joint(n);
  GameState state;
  for (int e = 0; e < episodes; ++e) {
    state = GameState{};
    for (int t = 0; t < T; ++t) {
      encode_observation_into(game, state, obs);
      std::span<const double> probs;
      for (int i = 0; i < n; ++i) {
        if (obs_free) {
          probs = fixed[i];
        } else if (!one_per_step || i == 0) {
          probs = ev.distribution(i, obs, cache);
        }
        joint[i] = pick(probs);
      }
      auto [next, r] = step(game, state, joint);
      visit(e, t, obs, joint, r);
      state = std::move(next);
    }
  }
}

}  // namespace

BatchEngine::BatchEngine(const Policy& policy)
    : policy_(&policy),
      evaluator_(policy),
      batched_(policy.kind() != VariantKind::kHyperMLPNoDecouple),
      shared_rows_(policy.kind() == VariantKind::kFuPS) {}

void BatchEngine::refresh() {
  evaluator_.refresh();
  have_batch_ = false;
}

bool BatchEngine::per_agent_params() const {
  const VariantKind k = policy_->kind();
  return k == VariantKind::kNoPS || k == VariantKind::kHyperLinear || k == VariantKind::kHyperMLP;
}

std::int32_t BatchEngine::extra_input(int agent) const {
  switch (policy_->kind()) {
    case VariantKind::kFuPSID: return policy_->dims().obs_dim + agent;
    case VariantKind::kFuPSIDNoState: return agent;
    default: return -1;
  }
}

// Rows are ordered (t, agent, episode); (t, episode) when shared_rows_.
Batch BatchEngine::collect(const GameConfig& game, int batch_size, Rng& rng) {
  check_dims(game, *policy_);
  if (batch_size < 0) throw InputError("batch_size must be non-negative");
  const int n = game.n_agents;
  const int T = game.episode_length();
  const int B = batch_size;
  const MlpShape& shape = policy_->target_shape();
  const std::size_t L = shape.num_layers();
  const int row_agents = shared_rows_ ? 1 : n;

  Batch b;
  b.episodes = B;
  b.horizon = T;
  b.n_agents = n;
  b.obs_dim = game.obs_dim();
  const std::size_t records = static_cast<std::size_t>(B) * T * n;
  b.obs.resize(static_cast<std::size_t>(B) * T * b.obs_dim);
  b.actions.resize(records);
  b.logprobs.resize(records);
  b.rewards.resize(records);

  if (batched_) {
    input_.reset(shape.input_dim());
    acts_.resize(shape, static_cast<std::size_t>(B) * T * row_agents);
  }
  std::vector<GameState> states(B);
  std::vector<JointAction> joint(B, JointAction(n));
  ForwardCache cache;

  for (int t = 0; t < T; ++t) {
    for (int e = 0; e < B; ++e) {
      const std::span<double> o(b.obs.data() + (static_cast<std::size_t>(e) * T + t) * b.obs_dim,
                                static_cast<std::size_t>(b.obs_dim));
      encode_observation_into(game, states[e], o);
    }
    const std::size_t step_row = static_cast<std::size_t>(t) * row_agents * B;
    if (batched_) {
      const bool no_state = policy_->kind() == VariantKind::kFuPSIDNoState;
      for (int e = 0; e < B; ++e) {
        input_.add_group(no_state ? std::span<const double>() : b.observation(e, t));
      }
      for (int i = 0; i < row_agents; ++i) {
        for (int e = 0; e < B; ++e) input_.add_row(t * B + e, extra_input(i));
      }
      if (per_agent_params()) {
        for (int i = 0; i < n; ++i) {
          const std::size_t r0 = step_row + static_cast<std::size_t>(i) * B;
          forward_rows(shape, evaluator_.agent_params(i, {}), input_, {r0, r0 + B}, acts_);
        }
      } else {
        forward_rows(shape, evaluator_.agent_params(0, {}), input_,
                     {step_row, step_row + static_cast<std::size_t>(row_agents) * B}, acts_);
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int e = 0; e < B; ++e) {
        const std::size_t row = step_row + static_cast<std::size_t>(shared_rows_ ? 0 : i) * B + e;
        const std::span<const double> probs =
            batched_ ? acts_.row(L - 1, row) : evaluator_.distribution(i, b.observation(e, t), cache);
        const int a = sample_categorical(probs, rng);
        joint[e][i] = a;
        const std::size_t k = b.index(e, t, i);
        b.actions[k] = a;
        b.logprobs[k] = std::log(probs[a]);
      }
    }
    for (int e = 0; e < B; ++e) {
      auto [next, r] = step(game, states[e], joint[e]);
      for (int i = 0; i < n; ++i) b.rewards[b.index(e, t, i)] = r[i];
      states[e] = std::move(next);
    }
  }
  have_batch_ = batched_;
  return b;
}

void BatchEngine::accumulate_gradient(const Batch& batch, double gamma,
                                      std::span<const std::span<double>> sinks) {
  const Policy& p = *policy_;
  const int n = p.n_agents();
  if (static_cast<int>(sinks.size()) != n) throw InputError("need one gradient sink per agent");
  for (const auto& s : sinks) {
    if (s.size() != p.num_params()) throw InputError("gradient sink has wrong size");
  }
  if (!batched_) {
    accumulate_policy_gradient(batch, evaluator_, gamma, sinks);
    return;
  }
  if (batch.episodes == 0) return;
  const int T = batch.horizon;
  const int B = batch.episodes;
  const std::size_t expected_rows =
      static_cast<std::size_t>(B) * T * (shared_rows_ ? 1 : n);
  if (!have_batch_ || acts_.rows != expected_rows || batch.n_agents != n) {
    throw StateError("accumulate_gradient needs the batch from the last collect()");
  }

  const MlpShape& shape = p.target_shape();
  const std::size_t A = shape.output_dim();
  const std::size_t L = shape.num_layers();
  const std::size_t per_episode = static_cast<std::size_t>(T) * n;
  const double inv_b = 1.0 / B;

  std::vector<std::vector<double>> returns(B);
  for (int e = 0; e < B; ++e) {
    const std::span<const double> r(batch.rewards.data() + e * per_episode, per_episode);
    returns[e] = returns_to_go(r, T, n, gamma);
  }
  const std::size_t rows = acts_.rows;
  dout_.resize(rows * A);

  // dout = w (onehot(a) - pi), the log-prob gradient at the logits.
  if (shared_rows_) {
    // One row per (t, e). `only` < 0 sums every agent's term.
    auto fill = [&](int only) {
      std::fill(dout_.begin(), dout_.end(), 0.0);
      for (int t = 0; t < T; ++t) {
        for (int e = 0; e < B; ++e) {
          const std::size_t row = static_cast<std::size_t>(t) * B + e;
          const auto probs = acts_.row(L - 1, row);
          double* d = dout_.data() + row * A;
          for (int i = 0; i < n; ++i) {
            if (only >= 0 && i != only) continue;
            const double w = returns[e][t * n + i] * inv_b;
            for (std::size_t a = 0; a < A; ++a) d[a] -= w * probs[a];
            d[batch.actions[batch.index(e, t, i)]] += w;
          }
        }
      }
    };
    const RowRange all{0, rows};
    const bool joint = std::all_of(sinks.begin(), sinks.end(),
                                   [&](const auto& s) { return s.data() == sinks[0].data(); });
    if (joint) {
      fill(-1);
      backward_rows(shape, p.params(), input_, acts_, dout_, std::span(&all, 1), sinks[0], scratch_);
    } else {
      for (int i = 0; i < n; ++i) {
        fill(i);
        backward_rows(shape, p.params(), input_, acts_, dout_, std::span(&all, 1), sinks[i],
                      scratch_);
      }
    }
    return;
  }

  for (int e = 0; e < B; ++e) {
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < n; ++i) {
        const std::size_t row = (static_cast<std::size_t>(t) * n + i) * B + e;
        const double w = returns[e][t * n + i] * inv_b;
        const auto probs = acts_.row(L - 1, row);
        double* d = dout_.data() + row * A;
        for (std::size_t a = 0; a < A; ++a) d[a] = -w * probs[a];
        d[batch.actions[batch.index(e, t, i)]] += w;
      }
    }
  }

  auto agent_ranges = [&](int i) {
    std::vector<RowRange> ranges;
    for (int t = 0; t < T; ++t) {
      const std::size_t r0 = (static_cast<std::size_t>(t) * n + i) * B;
      ranges.push_back({r0, r0 + B});
    }
    return ranges;
  };

  const std::size_t m = shape.param_count();
  switch (p.kind()) {
    case VariantKind::kNoPS:
      for (int i = 0; i < n; ++i) {
        const auto ranges = agent_ranges(i);
        backward_rows(shape, evaluator_.agent_params(i, {}), input_, acts_, dout_, ranges,
                      sinks[i].subspan(i * m, m), scratch_);
      }
      break;
    case VariantKind::kHyperLinear:
    case VariantKind::kHyperMLP:
      for (int i = 0; i < n; ++i) {
        dtheta_.assign(m, 0.0);
        const auto ranges = agent_ranges(i);
        backward_rows(shape, evaluator_.agent_params(i, {}), input_, acts_, dout_, ranges, dtheta_,
                      scratch_);
        evaluator_.pull_back(i, {}, dtheta_, sinks[i]);
      }
      break;
    default: {
      const bool joint = std::all_of(sinks.begin(), sinks.end(),
                                     [&](const auto& s) { return s.data() == sinks[0].data(); });
      if (joint) {
        const RowRange all{0, acts_.rows};
        backward_rows(shape, p.params(), input_, acts_, dout_, std::span(&all, 1), sinks[0],
                      scratch_);
      } else {
        for (int i = 0; i < n; ++i) {
          const auto ranges = agent_ranges(i);
          backward_rows(shape, p.params(), input_, acts_, dout_, ranges, sinks[i], scratch_);
        }
      }
      break;
    }
  }
}

Batch collect_batch(const GameConfig& game, const Policy& policy, int batch_size, Rng& rng) {
  BatchEngine engine(policy);
  return engine.collect(game, batch_size, rng);
}

std::vector<double> returns_to_go(std::span<const double> rewards, int horizon, int n_agents,
                                  double gamma) {
  if (rewards.size() != static_cast<std::size_t>(horizon) * n_agents) {
    throw InputError("rewards do not match horizon x n_agents");
  }
  std::vector<double> g(rewards.size());
  for (int i = 0; i < n_agents; ++i) {
    double acc = 0.0;
    for (int t = horizon - 1; t >= 0; --t) {
      acc = rewards[t * n_agents + i] + gamma * acc;
      g[t * n_agents + i] = acc;
    }
  }
  return g;
}

void accumulate_policy_gradient(const Batch& batch, PolicyEvaluator& evaluator, double gamma,
                                std::span<const std::span<double>> sinks, GradientPath path) {
  if (batch.episodes == 0) return;
  const int T = batch.horizon;
  const int n = batch.n_agents;
  const std::size_t per_episode = static_cast<std::size_t>(T) * n;
  const double inv_b = 1.0 / batch.episodes;

  std::vector<WeightedSample> samples;
  samples.reserve(batch.actions.size());
  for (int e = 0; e < batch.episodes; ++e) {
    const std::span<const double> r(batch.rewards.data() + e * per_episode, per_episode);
    const std::vector<double> G = returns_to_go(r, T, n, gamma);
    for (int t = 0; t < T; ++t) {
      const auto o = batch.observation(e, t);
      for (int i = 0; i < n; ++i) {
        samples.push_back({i, o, batch.actions[batch.index(e, t, i)], G[t * n + i] * inv_b});
      }
    }
  }
  evaluator.accumulate(samples, sinks, path);
}

FlatGradient policy_gradient(const Batch& batch, const Policy& policy, double gamma) {
  FlatGradient g;
  g.values.assign(policy.num_params(), 0.0);
  g.layout = policy.layout();
  std::vector<std::span<double>> sinks(policy.n_agents(), std::span<double>(g.values));
  PolicyEvaluator ev(policy);
  accumulate_policy_gradient(batch, ev, gamma, sinks);
  return g;
}

double evaluate(const GameConfig& game, const Policy& policy, int episodes, Rng& rng,
                EvalMode mode) {
  check_dims(game, policy);
  if (episodes < 1) throw InputError("evaluate needs at least one episode");
  PolicyEvaluator ev(policy);
  std::vector<double> obs(game.obs_dim());
  double total = 0.0;
  rollout(
      game, ev, episodes, obs,
      [&](std::span<const double> probs) {
        return mode == EvalMode::kSampled ? sample_categorical(probs, rng) : argmax(probs);
      },
      [&](int, int, const std::vector<double>&, const JointAction&, const RewardVector& r) {
        for (double x : r) total += x;
      });
  return total / (static_cast<double>(episodes) * game.episode_length() * game.n_agents);
}

TrainLog train(const TrainConfig& config) {
  config.validate();
  const GameConfig& game = config.game;
  const int n = game.n_agents;

  Rng rng(config.seed);
  Rng eval_rng(mix64(config.seed ^ 0x5eed0e7a1ULL));

  TrainLog log;
  Policy policy = Policy::build(config.variant, dims_for(game), rng);
  const std::size_t P = policy.num_params();
  const bool hyper = is_hyper(policy.kind());
  BatchEngine engine(policy);

  auto eval_record = [&](int update) {
    EvalRecord rec;
    rec.update = update;
    rec.eval_reward_sampled = evaluate(game, policy, config.eval_episodes, eval_rng);
    rec.eval_reward_argmax =
        evaluate(game, policy, config.eval_episodes, eval_rng, EvalMode::kArgmax);
    if (hyper) rec.embed_cos_distance = embedding_cosine_distance(policy).value;
    return rec;
  };
  log.curve.push_back(eval_record(0));

  std::vector<double> joint(P);
  std::vector<std::vector<double>> per_agent;
  std::vector<std::span<double>> joint_sinks(n, std::span<double>(joint));
  std::vector<std::span<double>> agent_sinks;
  std::vector<std::vector<double>> window;
  double conflict_sum = 0.0;
  double conflict_min = 1.0;
  int conflict_count = 0;
  int zero_pairs = 0;
  double reward_sum = 0.0;
  int reward_count = 0;

  for (int u = 1; u <= config.total_steps; ++u) {
    const int next_eval = std::min(
        ((u + config.eval_interval - 1) / config.eval_interval) * config.eval_interval,
        config.total_steps);
    const bool in_window = config.diagnostics && u > next_eval - config.diag_window;

    Batch batch;
    try {
      batch = engine.collect(game, config.batch_size, rng);
    } catch (const InputError&) {
      // Only reachable once the parameters have blown up.
      log.abort = AbortInfo{u, "action_distribution"};
      break;
    }
    const double mr = batch.mean_reward();
    log.train_reward.push_back(mr);
    reward_sum += mr;
    ++reward_count;

    std::fill(joint.begin(), joint.end(), 0.0);
    if (in_window) {
      per_agent.assign(n, std::vector<double>(P, 0.0));
      agent_sinks.assign(per_agent.begin(), per_agent.end());
      engine.accumulate_gradient(batch, config.gamma, agent_sinks);
      for (const auto& g : per_agent) simd::axpy(1.0, g, joint);
      std::vector<std::span<const double>> views(per_agent.begin(), per_agent.end());
      const ConflictReport c = gradient_conflict(views);
      conflict_sum += c.mean;
      conflict_min = std::min(conflict_min, c.min);
      zero_pairs += c.zero_norm_pairs;
      ++conflict_count;
    } else {
      engine.accumulate_gradient(batch, config.gamma, joint_sinks);
    }

    if (!std::all_of(joint.begin(), joint.end(), [](double v) { return std::isfinite(v); })) {
      log.abort = AbortInfo{u, "policy_gradient"};
      break;
    }
    if (in_window) window.push_back(joint);

    // SGD minimises the negated objective.
    simd::scale(-1.0, joint);
    sgd_step(policy.mutable_params(), joint, config.lr);
    engine.refresh();
    const auto params = policy.params();
    if (!std::all_of(params.begin(), params.end(), [](double v) { return std::isfinite(v); })) {
      log.abort = AbortInfo{u, "parameters"};
      break;
    }

    if (u == next_eval) {
      EvalRecord rec = eval_record(u);
      rec.train_reward_mean = reward_sum / reward_count;
      if (conflict_count > 0) {
        rec.grad_conflict_mean = conflict_sum / conflict_count;
        rec.grad_conflict_min = conflict_min;
        rec.zero_norm_pairs = zero_pairs;
      }
      rec.window = static_cast<int>(window.size());
      if (window.size() >= 2) rec.grad_variance_mean = gradient_variance(window).mean_variance;
      if (!std::isfinite(rec.eval_reward_sampled)) {
        log.abort = AbortInfo{u, "eval_reward"};
        log.curve.push_back(rec);
        break;
      }
      log.curve.push_back(rec);
      window.clear();
      conflict_sum = 0.0;
      conflict_min = 1.0;
      conflict_count = 0;
      zero_pairs = 0;
      reward_sum = 0.0;
      reward_count = 0;
    }
  }
  log.final_policy = std::move(policy);
  return log;
}

}  // namespace hmlab
