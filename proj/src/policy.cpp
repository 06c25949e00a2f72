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

#include "hmlab/policy.hpp"

#include <algorithm>
#include <cmath>

#include "hmlab/errors.hpp"

namespace hmlab {

std::string to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::kNoPS: return "nops";
    case VariantKind::kFuPS: return "fups";
    case VariantKind::kFuPSID: return "fups_id";
    case VariantKind::kFuPSIDNoState: return "fups_id_nostate";
    case VariantKind::kHyperLinear: return "hyper_linear";
    case VariantKind::kHyperMLP: return "hyper_mlp";
    case VariantKind::kHyperMLPNoDecouple: return "hyper_mlp_nodecouple";
  }
  return "?";
}

VariantKind parse_variant_kind(const std::string& s) {
  static const std::map<std::string, VariantKind> kNames = {
      {"nops", VariantKind::kNoPS},
      {"fups", VariantKind::kFuPS},
      {"fups_id", VariantKind::kFuPSID},
      {"fups+id", VariantKind::kFuPSID},
      {"fups_id_nostate", VariantKind::kFuPSIDNoState},
      {"hyper_linear", VariantKind::kHyperLinear},
      {"hyper_mlp", VariantKind::kHyperMLP},
      {"hyper_mlp_nodecouple", VariantKind::kHyperMLPNoDecouple},
  };
  auto it = kNames.find(s);
  if (it == kNames.end()) throw ConfigError("unknown variant kind '" + s + "'");
  return it->second;
}

bool is_hyper(VariantKind kind) {
  return kind == VariantKind::kHyperLinear || kind == VariantKind::kHyperMLP ||
         kind == VariantKind::kHyperMLPNoDecouple;
}

VariantSpec default_variant(VariantKind kind, int n_agents) {
  VariantSpec v;
  v.kind = kind;
  v.hidden_dim = kind == VariantKind::kNoPS ? 4 : 4 * n_agents;
  v.embed_dim = is_hyper(kind) ? n_agents : 0;
  return v;
}

PolicyDims dims_for(const GameConfig& game) {
  return {game.n_agents, game.n_actions, game.obs_dim()};
}

struct PolicyShapes {
  MlpShape target;
  MlpShape hyper;
  int embed_dim = 0;
  std::size_t hyper_count = 0;
  std::size_t embed_count = 0;
  std::size_t total = 0;

  static PolicyShapes make(const VariantSpec& v, const PolicyDims& d) {
    if (d.n_agents < 1 || d.n_actions < 1 || d.obs_dim < 1) {
      throw ConfigError("policy dimensions must be positive");
    }
    if (v.hidden_dim < 1) throw ConfigError("hidden_dim must be positive");
    const auto n = static_cast<std::size_t>(d.n_agents);
    const auto obs = static_cast<std::size_t>(d.obs_dim);
    std::size_t in = obs;
    if (v.kind == VariantKind::kFuPSID) in = obs + n;
    if (v.kind == VariantKind::kFuPSIDNoState) in = n;

    PolicyShapes s;
    s.target = MlpShape({in, static_cast<std::size_t>(v.hidden_dim),
                         static_cast<std::size_t>(d.n_actions)});
    const std::size_t m = s.target.param_count();
    switch (v.kind) {
      case VariantKind::kNoPS:
        s.total = n * m;
        break;
      case VariantKind::kFuPS:
      case VariantKind::kFuPSID:
      case VariantKind::kFuPSIDNoState:
        s.total = m;
        break;
      case VariantKind::kHyperLinear:
        s.embed_dim = d.n_agents;
        s.hyper = MlpShape({n, m}, OutputKind::kLinear);
        s.hyper_count = s.hyper.param_count();
        s.total = s.hyper_count;
        break;
      case VariantKind::kHyperMLP:
      case VariantKind::kHyperMLPNoDecouple: {
        if (v.hyper_hidden_dim < 1) throw ConfigError("hyper_hidden_dim must be positive");
        s.embed_dim = v.embed_dim > 0 ? v.embed_dim : d.n_agents;
        const auto E = static_cast<std::size_t>(s.embed_dim);
        const std::size_t trunk_in = v.kind == VariantKind::kHyperMLP ? E : obs + E;
        s.hyper = MlpShape({trunk_in, static_cast<std::size_t>(v.hyper_hidden_dim), m},
                           OutputKind::kLinear);
        s.hyper_count = s.hyper.param_count();
        s.embed_count = n * E;
        s.total = s.hyper_count + s.embed_count;
        break;
      }
    }
    return s;
  }
};

std::size_t count_params(const VariantSpec& variant, const PolicyDims& dims) {
  return PolicyShapes::make(variant, dims).total;
}

Policy Policy::build(const VariantSpec& variant, const PolicyDims& dims, Rng& rng) {
  const PolicyShapes shapes = PolicyShapes::make(variant, dims);
  Policy p;
  p.variant_ = variant;
  p.dims_ = dims;
  p.target_ = shapes.target;
  p.hyper_ = shapes.hyper;
  p.embed_dim_ = shapes.embed_dim;
  p.embed_offset_ = shapes.hyper_count;
  p.params_.assign(shapes.total, 0.0);

  const std::size_t m = p.target_.param_count();
  const std::span<double> all(p.params_);
  const auto n = static_cast<std::size_t>(dims.n_agents);

  auto fill = [](std::span<double> dst, const Tensor2& src, double scale = 1.0) {
    for (std::size_t i = 0; i < src.data.size(); ++i) dst[i] = scale * src.data[i];
  };
  auto fill_bias = [&rng](std::span<double> dst, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : dst) v = u(rng);
  };

  switch (variant.kind) {
    case VariantKind::kNoPS:
      for (std::size_t i = 0; i < n; ++i) direct_init(p.target_, all.subspan(i * m, m), rng);
      break;
    case VariantKind::kFuPS:
    case VariantKind::kFuPSID:
    case VariantKind::kFuPSIDNoState:
      direct_init(p.target_, all, rng);
      break;
    case VariantKind::kHyperLinear: {
      p.fixed_embeddings_.assign(n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i) p.fixed_embeddings_[i * n + i] = 1.0;
      const auto W = all.subspan(p.hyper_.weight_offset(0), n * m);
      const auto b = all.subspan(p.hyper_.bias_offset(0), m);
      if (variant.reset_fan_init) {
        // Each row is an independent direct init of the action network; b = 0.
        for (std::size_t i = 0; i < n; ++i) direct_init(p.target_, W.subspan(i * m, m), rng);
      } else {
        fill(W, fan_in_uniform_init(n, m, rng));
        fill_bias(b, n);
      }
      break;
    }
    case VariantKind::kHyperMLP:
    case VariantKind::kHyperMLPNoDecouple: {
      const auto E = static_cast<std::size_t>(p.embed_dim_);
      if (E < n) {
        throw ConfigError("orthogonal agent embeddings need embed_dim >= n_agents (" +
                          std::to_string(E) + " < " + std::to_string(n) + ")");
      }
      const std::size_t trunk_in = p.hyper_.in_dim(0);
      const std::size_t H = p.hyper_.out_dim(0);
      fill(all.subspan(p.hyper_.weight_offset(0), trunk_in * H),
           fan_in_uniform_init(trunk_in, H, rng));
      fill_bias(all.subspan(p.hyper_.bias_offset(0), H), trunk_in);

      const auto W2 = all.subspan(p.hyper_.weight_offset(1), H * m);
      const auto b2 = all.subspan(p.hyper_.bias_offset(1), m);
      if (variant.reset_fan_init) {
        // Generated parameters start as one shared direct init plus a small
        // per-agent perturbation.
        direct_init(p.target_, b2, rng);
        fill(W2, fan_in_uniform_init(H, m, rng), variant.head_scale);
      } else {
        fill(W2, fan_in_uniform_init(H, m, rng));
        fill_bias(b2, H);
      }
      fill(all.subspan(p.embed_offset_, n * E), orthogonal_init(n, E, 1.0, rng));
      break;
    }
  }
  return p;
}

ParamLayout Policy::layout() const {
  ParamLayout out;
  const std::size_t m = target_.param_count();
  switch (variant_.kind) {
    case VariantKind::kNoPS:
      for (int i = 0; i < dims_.n_agents; ++i) {
        auto l = target_.layout("agent" + std::to_string(i) + ".", i * m);
        out.insert(out.end(), l.begin(), l.end());
      }
      break;
    case VariantKind::kFuPS:
    case VariantKind::kFuPSID:
    case VariantKind::kFuPSIDNoState:
      out = target_.layout("shared.");
      break;
    default:
      out = hyper_.layout("hyper.");
      if (embeddings_trainable()) {
        out.push_back({"embeddings", static_cast<std::size_t>(dims_.n_agents),
                       static_cast<std::size_t>(embed_dim_), embed_offset_});
      }
      break;
  }
  return out;
}

bool Policy::embeddings_trainable() const {
  return variant_.kind == VariantKind::kHyperMLP ||
         variant_.kind == VariantKind::kHyperMLPNoDecouple;
}

std::span<const double> Policy::embedding(int agent) const {
  if (!is_hyper(variant_.kind)) throw VariantError("variant has no agent embeddings");
  if (agent < 0 || agent >= dims_.n_agents) throw InputError("agent index out of range");
  const auto E = static_cast<std::size_t>(embed_dim_);
  if (embeddings_trainable()) {
    return std::span<const double>(params_).subspan(embed_offset_ + agent * E, E);
  }
  return std::span<const double>(fixed_embeddings_).subspan(agent * E, E);
}

Tensor2 Policy::embeddings() const {
  Tensor2 e(dims_.n_agents, embed_dim_);
  for (int i = 0; i < dims_.n_agents; ++i) {
    const auto row = embedding(i);
    std::copy(row.begin(), row.end(), e.row(i).begin());
  }
  return e;
}

void Policy::build_target_input(int agent, std::span<const double> obs,
                                std::span<double> out) const {
  if (agent < 0 || agent >= dims_.n_agents) throw InputError("agent index out of range");
  if (out.size() != target_.input_dim()) throw InputError("target input buffer has wrong size");
  std::fill(out.begin(), out.end(), 0.0);
  if (variant_.kind == VariantKind::kFuPSIDNoState) {
    out[agent] = 1.0;
    return;
  }
  if (obs.size() != static_cast<std::size_t>(dims_.obs_dim)) {
    throw InputError("observation has " + std::to_string(obs.size()) + " entries, expected " +
                     std::to_string(dims_.obs_dim));
  }
  std::copy(obs.begin(), obs.end(), out.begin());
  if (variant_.kind == VariantKind::kFuPSID) out[obs.size() + agent] = 1.0;
}

void Policy::build_hyper_input(int agent, std::span<const double> obs,
                               std::span<double> out) const {
  if (!is_hyper(variant_.kind)) throw VariantError("variant has no hypernetwork");
  if (out.size() != hyper_.input_dim()) throw InputError("hyper input buffer has wrong size");
  const auto e = embedding(agent);
  if (variant_.kind == VariantKind::kHyperMLPNoDecouple) {
    if (obs.size() != static_cast<std::size_t>(dims_.obs_dim)) {
      throw InputError("observation has wrong size");
    }
    std::copy(obs.begin(), obs.end(), out.begin());
    std::copy(e.begin(), e.end(), out.begin() + obs.size());
  } else {
    std::copy(e.begin(), e.end(), out.begin());
  }
}

void Policy::set_params(std::span<const double> values) {
  if (values.size() != params_.size()) throw InputError("parameter vector has wrong size");
  std::copy(values.begin(), values.end(), params_.begin());
}

// ---------------------------------------------------------------------------
// PolicyEvaluator

PolicyEvaluator::PolicyEvaluator(const Policy& policy) : policy_(&policy) { refresh(); }

void PolicyEvaluator::refresh() {
  const auto n = static_cast<std::size_t>(policy_->n_agents());
  generated_.assign(n, {});
  generated_valid_.assign(n, 0);
  per_obs_generated_.assign(n, {});
  input_buf_.resize(policy_->target_shape().input_dim());
  if (is_hyper(policy_->kind())) {
    hyper_input_buf_.resize(policy_->hyper_shape().input_dim());
    dinput_buf_.resize(policy_->hyper_shape().input_dim());
  }
}

std::span<const double> PolicyEvaluator::agent_params(int agent, std::span<const double> obs) {
  const Policy& p = *policy_;
  if (agent < 0 || agent >= p.n_agents()) throw InputError("agent index out of range");
  const std::size_t m = p.target_shape().param_count();
  switch (p.kind()) {
    case VariantKind::kNoPS:
      return p.params().subspan(agent * m, m);
    case VariantKind::kFuPS:
    case VariantKind::kFuPSID:
    case VariantKind::kFuPSIDNoState:
      return p.params().subspan(0, m);
    case VariantKind::kHyperLinear:
    case VariantKind::kHyperMLP: {
      if (!generated_valid_[agent]) {
        p.build_hyper_input(agent, {}, hyper_input_buf_);
        const auto out = forward(p.hyper_shape(), p.params().subspan(0, p.hyper_shape().param_count()),
                                 hyper_input_buf_, hyper_cache_);
        generated_[agent].assign(out.begin(), out.end());
        generated_valid_[agent] = 1;
      }
      return generated_[agent];
    }
    case VariantKind::kHyperMLPNoDecouple: {
      auto& cache = per_obs_generated_[agent];
      std::vector<double> key(obs.begin(), obs.end());
      auto it = cache.find(key);
      if (it == cache.end()) {
        p.build_hyper_input(agent, obs, hyper_input_buf_);
        const auto out = forward(p.hyper_shape(), p.params().subspan(0, p.hyper_shape().param_count()),
                                 hyper_input_buf_, hyper_cache_);
        it = cache.emplace(std::move(key), std::vector<double>(out.begin(), out.end())).first;
      }
      return it->second;
    }
  }
  throw VariantError("unknown variant");
}

std::span<const double> PolicyEvaluator::target_input(int agent, std::span<const double> obs) {
  const VariantKind k = policy_->kind();
  if (k == VariantKind::kFuPSID || k == VariantKind::kFuPSIDNoState) {
    policy_->build_target_input(agent, obs, input_buf_);
    return input_buf_;
  }
  if (obs.size() != static_cast<std::size_t>(policy_->dims().obs_dim)) {
    throw InputError("observation has " + std::to_string(obs.size()) + " entries, expected " +
                     std::to_string(policy_->dims().obs_dim));
  }
  return obs;
}

std::span<const double> PolicyEvaluator::distribution(int agent, std::span<const double> obs,
                                                      ForwardCache& cache) {
  const auto params = agent_params(agent, obs);
  return forward(policy_->target_shape(), params, target_input(agent, obs), cache);
}

void PolicyEvaluator::accumulate(std::span<const WeightedSample> samples,
                                 std::span<const std::span<double>> sinks, GradientPath path) {
  if (static_cast<int>(sinks.size()) != policy_->n_agents()) {
    throw InputError("need one gradient sink per agent");
  }
  for (const auto& s : sinks) {
    if (s.size() != policy_->num_params()) throw InputError("gradient sink has wrong size");
  }
  if (!is_hyper(policy_->kind())) {
    accumulate_shared(samples, sinks);
  } else if (path == GradientPath::kDecoupled) {
    accumulate_hyper_decoupled(samples, sinks);
  } else {
    accumulate_hyper_direct(samples, sinks);
  }
}

void PolicyEvaluator::accumulate_shared(std::span<const WeightedSample> samples,
                                        std::span<const std::span<double>> sinks) {
  const Policy& p = *policy_;
  const MlpShape& shape = p.target_shape();
  const std::size_t m = shape.param_count();
  const std::size_t A = shape.output_dim();
  // FuPS agents at the same step share both parameters and input, so their
  // output gradients can be summed before a single backward pass.
  const bool merge = p.kind() == VariantKind::kFuPS;

  std::size_t i = 0;
  while (i < samples.size()) {
    const WeightedSample& s = samples[i];
    const auto params = agent_params(s.agent, s.obs);
    const std::size_t offset = p.kind() == VariantKind::kNoPS ? s.agent * m : 0;
    const auto sink = sinks[s.agent].subspan(offset, m);
    forward(shape, params, target_input(s.agent, s.obs), scratch_);

    if (!merge) {
      accumulate_logprob_gradient(shape, params, scratch_, s.action, s.weight, sink);
      ++i;
      continue;
    }
    std::vector<double>& dl = scratch_.dlogits;
    dl.assign(A, 0.0);
    std::size_t j = i;
    while (j < samples.size() && samples[j].obs.data() == s.obs.data() &&
           samples[j].obs.size() == s.obs.size() &&
           sinks[samples[j].agent].data() == sinks[s.agent].data()) {
      const WeightedSample& t = samples[j];
      if (t.action < 0 || static_cast<std::size_t>(t.action) >= A) {
        throw InputError("action index out of range");
      }
      for (std::size_t a = 0; a < A; ++a) dl[a] -= t.weight * scratch_.probs[a];
      dl[t.action] += t.weight;
      ++j;
    }
    backward_accumulate(shape, params, scratch_, std::vector<double>(dl), 1.0, sink);
    i = j;
  }
}

void PolicyEvaluator::pull_back(int agent, std::span<const double> obs,
                                std::span<const double> dtheta, std::span<double> sink) {
  const Policy& p = *policy_;
  if (!is_hyper(p.kind())) throw VariantError("pull_back needs a hypernetwork variant");
  if (sink.size() != p.num_params()) throw InputError("gradient sink has wrong size");
  if (dtheta.size() != p.target_shape().param_count()) throw InputError("dtheta has wrong size");
  const MlpShape& hs = p.hyper_shape();
  const auto hparams = p.params().subspan(0, hs.param_count());
  p.build_hyper_input(agent, obs, hyper_input_buf_);
  forward(hs, hparams, hyper_input_buf_, hyper_cache_);
  const bool emb = p.embeddings_trainable();
  backward_accumulate(hs, hparams, hyper_cache_, dtheta, 1.0, sink.subspan(0, hs.param_count()),
                      emb ? std::span<double>(dinput_buf_) : std::span<double>());
  if (emb) {
    const auto E = static_cast<std::size_t>(p.embed_dim());
    const std::size_t in_off = p.kind() == VariantKind::kHyperMLPNoDecouple
                                   ? static_cast<std::size_t>(p.dims().obs_dim)
                                   : 0;
    double* de = sink.data() + p.embed_offset() + agent * E;
    for (std::size_t k = 0; k < E; ++k) de[k] += dinput_buf_[in_off + k];
  }
}

void PolicyEvaluator::accumulate_hyper_direct(std::span<const WeightedSample> samples,
                                              std::span<const std::span<double>> sinks) {
  const MlpShape& shape = policy_->target_shape();
  for (const WeightedSample& s : samples) {
    const auto params = agent_params(s.agent, s.obs);
    forward(shape, params, target_input(s.agent, s.obs), scratch_);
    dtheta_buf_.assign(shape.param_count(), 0.0);
    accumulate_logprob_gradient(shape, params, scratch_, s.action, s.weight, dtheta_buf_);
    pull_back(s.agent, s.obs, dtheta_buf_, sinks[s.agent]);
  }
}

void PolicyEvaluator::accumulate_hyper_decoupled(std::span<const WeightedSample> samples,
                                                 std::span<const std::span<double>> sinks) {
  const Policy& p = *policy_;
  const MlpShape& shape = p.target_shape();
  const std::size_t m = shape.param_count();

  if (p.kind() == VariantKind::kHyperMLPNoDecouple) {
    // The Jacobian depends on the observation, so the factor is per
    // (agent, observation).
    std::map<std::pair<int, std::vector<double>>, std::vector<double>> z;
    for (const WeightedSample& s : samples) {
      const auto params = agent_params(s.agent, s.obs);
      forward(shape, params, target_input(s.agent, s.obs), scratch_);
      auto& zi = z[{s.agent, std::vector<double>(s.obs.begin(), s.obs.end())}];
      if (zi.empty()) zi.assign(m, 0.0);
      accumulate_logprob_gradient(shape, params, scratch_, s.action, s.weight, zi);
    }
    for (const auto& [key, zi] : z) pull_back(key.first, key.second, zi, sinks[key.first]);
    return;
  }

  const auto n = static_cast<std::size_t>(p.n_agents());
  std::vector<std::vector<double>> z(n);
  for (const WeightedSample& s : samples) {
    const auto params = agent_params(s.agent, s.obs);
    forward(shape, params, target_input(s.agent, s.obs), scratch_);
    auto& zi = z[s.agent];
    if (zi.empty()) zi.assign(m, 0.0);
    accumulate_logprob_gradient(shape, params, scratch_, s.action, s.weight, zi);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!z[i].empty()) pull_back(static_cast<int>(i), {}, z[i], sinks[i]);
  }
}

// ---------------------------------------------------------------------------
// Free-function API

namespace {

FlatGradient accumulate_all(const Policy& policy, std::span<const WeightedSample> samples,
                            GradientPath path) {
  FlatGradient g;
  g.values.assign(policy.num_params(), 0.0);
  g.layout = policy.layout();
  std::vector<std::span<double>> sinks(policy.n_agents(), std::span<double>(g.values));
  PolicyEvaluator ev(policy);
  ev.accumulate(samples, sinks, path);
  return g;
}

}  // namespace

MlpParams generate_agent_params(const Policy& policy, int agent) {
  if (policy.kind() == VariantKind::kHyperMLPNoDecouple) {
    throw VariantError("HyperMLPNoDecouple generates parameters per observation");
  }
  return generate_agent_params(policy, agent, {});
}

MlpParams generate_agent_params(const Policy& policy, int agent, std::span<const double> obs) {
  if (!is_hyper(policy.kind())) {
    throw VariantError("generate_agent_params needs a hypernetwork variant, got " +
                       to_string(policy.kind()));
  }
  PolicyEvaluator ev(policy);
  const auto theta = ev.agent_params(agent, obs);
  MlpParams out(policy.target_shape());
  std::copy(theta.begin(), theta.end(), out.flat.begin());
  return out;
}

std::vector<double> action_distribution(const Policy& policy, int agent,
                                        std::span<const double> obs) {
  PolicyEvaluator ev(policy);
  ForwardCache cache;
  const auto probs = ev.distribution(agent, obs, cache);
  return {probs.begin(), probs.end()};
}

FlatGradient logprob_gradient(const Policy& policy, int agent, std::span<const double> obs,
                              int action) {
  const WeightedSample s{agent, obs, action, 1.0};
  return accumulate_all(policy, std::span(&s, 1), GradientPath::kDirect);
}

FlatGradient decoupled_gradient(const Policy& policy, std::span<const WeightedSample> samples) {
  if (!is_hyper(policy.kind())) {
    throw VariantError("decoupled_gradient needs a hypernetwork variant, got " +
                       to_string(policy.kind()));
  }
  return accumulate_all(policy, samples, GradientPath::kDecoupled);
}

FlatGradient direct_gradient(const Policy& policy, std::span<const WeightedSample> samples) {
  return accumulate_all(policy, samples, GradientPath::kDirect);
}

EmbeddingDistance embedding_cosine_distance(const Tensor2& e) {
  if (e.rows < 2) throw InputError("need at least two embeddings");
  std::vector<double> norms(e.rows);
  for (std::size_t i = 0; i < e.rows; ++i) {
    double s = 0.0;
    for (double v : e.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
  }
  EmbeddingDistance out;
  double total = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < e.rows; ++i) {
    for (std::size_t j = i + 1; j < e.rows; ++j) {
      if (norms[i] == 0.0 || norms[j] == 0.0) {
        ++out.skipped_pairs;
        continue;
      }
      double d = 0.0;
      for (std::size_t k = 0; k < e.cols; ++k) d += e(i, k) * e(j, k);
      total += 1.0 - d / (norms[i] * norms[j]);
      ++used;
    }
  }
  if (used == 0) throw NumericError("every embedding pair has a zero-norm member");
  out.value = total / used;
  return out;
}

EmbeddingDistance embedding_cosine_distance(const Policy& policy) {
  if (!is_hyper(policy.kind())) throw VariantError("variant has no agent embeddings");
  return embedding_cosine_distance(policy.embeddings());
}

}  // namespace hmlab
