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

#include "hmlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hmlab/errors.hpp"
#include "hmlab/simd.hpp"

namespace hmlab {

std::vector<FlatGradient> per_agent_gradients(const Batch& batch, const Policy& policy,
                                              double gamma) {
  const int n = policy.n_agents();
  std::vector<FlatGradient> out(n);
  std::vector<std::span<double>> sinks;
  const ParamLayout layout = policy.layout();
  for (auto& g : out) {
    g.values.assign(policy.num_params(), 0.0);
    g.layout = layout;
    sinks.emplace_back(g.values);
  }
  PolicyEvaluator ev(policy);
  accumulate_policy_gradient(batch, ev, gamma, sinks);
  return out;
}

ConflictReport gradient_conflict(std::span<const std::span<const double>> grads) {
  if (grads.size() < 2) throw InputError("gradient conflict needs at least two gradients");
  const std::size_t P = grads[0].size();
  std::vector<double> norms;
  for (const auto& g : grads) {
    if (g.size() != P) throw InputError("gradients have different lengths");
    norms.push_back(std::sqrt(simd::dot(g, g)));
  }
  ConflictReport r;
  r.min = 1.0;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (std::size_t j = i + 1; j < grads.size(); ++j) {
      double c = 0.0;
      if (norms[i] == 0.0 || norms[j] == 0.0) {
        ++r.zero_norm_pairs;
      } else {
        c = std::clamp(simd::dot(grads[i], grads[j]) / (norms[i] * norms[j]), -1.0, 1.0);
      }
      r.cosines.push_back(c);
      r.min = std::min(r.min, c);
    }
  }
  r.mean = std::accumulate(r.cosines.begin(), r.cosines.end(), 0.0) / r.cosines.size();
  return r;
}

ConflictReport gradient_conflict(const std::vector<FlatGradient>& grads) {
  std::vector<std::span<const double>> views;
  for (const auto& g : grads) views.emplace_back(g.values);
  return gradient_conflict(views);
}

VarianceReport gradient_variance(std::span<const std::span<const double>> window) {
  if (window.size() < 2) throw InputError("gradient variance needs a window of at least two");
  const std::size_t P = window[0].size();
  for (const auto& g : window) {
    if (g.size() != P) throw InputError("gradients have different lengths");
  }
  VarianceReport r;
  r.window = static_cast<int>(window.size());
  if (P == 0) return r;
  const double N = static_cast<double>(window.size());
  std::vector<double> mean(P, 0.0);
  for (const auto& g : window) simd::axpy(1.0 / N, g, mean);
  std::vector<double> d(P);
  double total = 0.0;
  for (const auto& g : window) {
    for (std::size_t k = 0; k < P; ++k) d[k] = g[k] - mean[k];
    total += simd::dot(d, d);
  }
  r.mean_variance = total / ((N - 1.0) * static_cast<double>(P));
  return r;
}

VarianceReport gradient_variance(const std::vector<std::vector<double>>& window) {
  std::vector<std::span<const double>> views(window.begin(), window.end());
  return gradient_variance(views);
}

namespace {

void check_distribution(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InputError("distribution has a negative or NaN entry");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-9) throw InputError("distribution does not sum to 1");
}

void check_pair(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw InputError("distributions differ in support size");
  check_distribution(p);
  check_distribution(q);
}

}  // namespace

double js_divergence(std::span<const double> p, std::span<const double> q, LogBase base) {
  check_pair(p, q);
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    const double a = p[k] > 0.0 ? 0.5 * p[k] * std::log(p[k] / m) : 0.0;
    const double b = q[k] > 0.0 ? 0.5 * q[k] * std::log(q[k] / m) : 0.0;
    s += a + b;  // a + b == b + a, so the result is exactly symmetric
  }
  if (base == LogBase::kTwo) s /= std::log(2.0);
  return std::max(s, 0.0);
}

double jsd_distance(std::span<const double> p, std::span<const double> q, LogBase base) {
  return std::sqrt(js_divergence(p, q, base));
}

double tvd(std::span<const double> p, std::span<const double> q) {
  check_pair(p, q);
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += std::abs(p[k] - q[k]);
  return 0.5 * s;
}

ObservationSet collect_observation_set(const GameConfig& game,
                                       const std::vector<const Policy*>& policies, int episodes,
                                       std::size_t cap, Rng& rng) {
  if (episodes < 0) throw InputError("episodes must be non-negative");
  ObservationSet all;
  if (episodes == 0) return all;
  for (const Policy* p : policies) {
    const Batch b = collect_batch(game, *p, episodes, rng);
    for (int e = 0; e < b.episodes; ++e) {
      for (int t = 0; t < b.horizon; ++t) {
        const auto o = b.observation(e, t);
        all.emplace_back(o.begin(), o.end());
      }
    }
  }
  if (all.size() <= cap) return all;
  ObservationSet kept;
  kept.reserve(cap);
  std::sample(all.begin(), all.end(), std::back_inserter(kept), cap, rng);
  return kept;
}

std::string to_string(Distance d) { return d == Distance::kJSD ? "jsd" : "tvd"; }

SNDReport snd(int n_agents, const PolicyFn& policy, const ObservationSet& observations,
              Distance distance) {
  if (n_agents < 2) throw InputError("SND needs at least two agents");
  if (observations.empty()) throw InputError("SND needs a non-empty observation set");
  SNDReport r;
  r.distance = distance;
  r.observations = observations.size();
  double total = 0.0;
  std::vector<std::vector<double>> dists(n_agents);
  for (const auto& o : observations) {
    for (int i = 0; i < n_agents; ++i) dists[i] = policy(i, o);
    for (int i = 0; i < n_agents; ++i) {
      for (int j = i + 1; j < n_agents; ++j) {
        total += distance == Distance::kJSD ? jsd_distance(dists[i], dists[j])
                                            : tvd(dists[i], dists[j]);
      }
    }
  }
  r.value = 2.0 * total /
            (static_cast<double>(n_agents) * (n_agents - 1) * static_cast<double>(observations.size()));
  return r;
}

SNDReport snd(const Policy& policy, const ObservationSet& observations, Distance distance) {
  PolicyEvaluator ev(policy);
  ForwardCache cache;
  return snd(
      policy.n_agents(),
      [&](int agent, std::span<const double> obs) {
        const auto p = ev.distribution(agent, obs, cache);
        return std::vector<double>(p.begin(), p.end());
      },
      observations, distance);
}

std::vector<DistanceRow> distances_demo() {
  // Mass moves between the two events that q already over-weights, so the
  // total variation never changes.
  std::vector<DistanceRow> rows;
  const std::vector<double> p = {0.5, 0.25, 0.25};
  for (int t = 0; t <= 5; ++t) {
    DistanceRow r;
    r.step = t;
    r.p = p;
    r.q = {0.2, 0.4 + 0.03 * t, 0.4 - 0.03 * t};
    r.tvd = tvd(r.p, r.q);
    r.jsd = jsd_distance(r.p, r.q);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace hmlab
