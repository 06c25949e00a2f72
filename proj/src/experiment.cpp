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

#include "hmlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "hmlab/checkpoint.hpp"
#include "hmlab/diagnostics.hpp"
#include "hmlab/errors.hpp"
#include "hmlab/io.hpp"

namespace hmlab {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (out.empty()) out.push_back("");
  return out;
}

void flatten(const json& j, const std::string& prefix, ConfigMap& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
    return;
  }
  if (prefix.empty()) throw ConfigError("JSON config must be an object");
  if (j.is_array()) {
    std::string joined;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) joined += ",";
      joined += j[i].is_string() ? j[i].get<std::string>() : j[i].dump();
    }
    out[prefix] = joined;
  } else if (j.is_string()) {
    out[prefix] = j.get<std::string>();
  } else {
    out[prefix] = j.dump();
  }
}

}  // namespace

ConfigMap parse_key_values(std::istream& in) {
  ConfigMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap parse_json_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON config: ") + e.what());
  }
  ConfigMap out;
  flatten(j, "", out);
  return out;
}

ConfigMap load_config_file(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_json_config(text);
  std::istringstream ss(text);
  return parse_key_values(ss);
}

namespace {

long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected an integer, got '" + v + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] != '-') {
      const unsigned long long x = std::stoull(v, &used, 0);
      if (used == v.size()) return x;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a non-negative integer, got '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "': expected a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "': expected true/false, got '" + v + "'");
}

const std::vector<std::string>& grid_keys() {
  static const std::vector<std::string> k = {
      "game.kind",          "game.n_agents",       "game.n_actions",        "game.horizon",
      "game.temporal",      "variant.kind",        "variant.hidden_dim",    "variant.embed_dim",
      "variant.hyper_hidden_dim", "variant.reset_fan_init", "variant.head_scale", "train.lr",
      "train.batch_size",   "train.total_steps",   "train.eval_interval",   "train.eval_episodes",
      "train.gamma",        "train.diagnostics",   "train.diag_window",     "diag.obs_episodes",
      "diag.obs_cap"};
  return k;
}

const std::vector<std::string>& scalar_keys() {
  static const std::vector<std::string> k = {"train.seeds", "train.seed_list",
                                             "experiment.master_seed", "experiment.out",
                                             "experiment.jobs"};
  return k;
}

// One grid point: every key has a single value.
RunSpec run_spec_from(const ConfigMap& c) {
  auto get = [&](const std::string& k) -> const std::string* {
    auto it = c.find(k);
    return it == c.end() ? nullptr : &it->second;
  };
  RunSpec r;
  GameConfig& g = r.train.game;
  if (auto v = get("game.kind")) g.kind = parse_game_kind(*v);
  if (auto v = get("game.n_agents")) g.n_agents = static_cast<int>(parse_int("game.n_agents", *v));
  g.n_actions = g.n_agents;
  if (auto v = get("game.n_actions")) g.n_actions = static_cast<int>(parse_int("game.n_actions", *v));
  if (auto v = get("game.horizon")) g.horizon = static_cast<int>(parse_int("game.horizon", *v));
  if (auto v = get("game.temporal")) g.temporal = parse_bool("game.temporal", *v);

  VariantKind kind = VariantKind::kFuPS;
  if (auto v = get("variant.kind")) kind = parse_variant_kind(*v);
  VariantSpec& vs = r.train.variant;
  vs = default_variant(kind, g.n_agents);
  if (auto v = get("variant.hidden_dim")) vs.hidden_dim = static_cast<int>(parse_int("variant.hidden_dim", *v));
  if (auto v = get("variant.embed_dim")) vs.embed_dim = static_cast<int>(parse_int("variant.embed_dim", *v));
  if (auto v = get("variant.hyper_hidden_dim")) {
    vs.hyper_hidden_dim = static_cast<int>(parse_int("variant.hyper_hidden_dim", *v));
  }
  if (auto v = get("variant.reset_fan_init")) vs.reset_fan_init = parse_bool("variant.reset_fan_init", *v);
  if (auto v = get("variant.head_scale")) vs.head_scale = parse_double("variant.head_scale", *v);

  TrainConfig& t = r.train;
  if (auto v = get("train.lr")) t.lr = parse_double("train.lr", *v);
  if (auto v = get("train.batch_size")) t.batch_size = static_cast<int>(parse_int("train.batch_size", *v));
  if (auto v = get("train.total_steps")) t.total_steps = static_cast<int>(parse_int("train.total_steps", *v));
  if (auto v = get("train.eval_interval")) {
    t.eval_interval = static_cast<int>(parse_int("train.eval_interval", *v));
  }
  if (auto v = get("train.eval_episodes")) {
    t.eval_episodes = static_cast<int>(parse_int("train.eval_episodes", *v));
  }
  if (auto v = get("train.gamma")) t.gamma = parse_double("train.gamma", *v);
  if (auto v = get("train.diagnostics")) t.diagnostics = parse_bool("train.diagnostics", *v);
  if (auto v = get("train.diag_window")) t.diag_window = static_cast<int>(parse_int("train.diag_window", *v));

  if (auto v = get("diag.obs_episodes")) {
    r.diag.obs_episodes = static_cast<int>(parse_int("diag.obs_episodes", *v));
  }
  if (auto v = get("diag.obs_cap")) r.diag.obs_cap = parse_u64("diag.obs_cap", *v);
  if (r.diag.obs_episodes < 0) throw ConfigError("diag.obs_episodes must be >= 0");
  if (r.diag.obs_cap < 1) throw ConfigError("diag.obs_cap must be >= 1");

  t.validate();
  // Surface architecture errors (e.g. embed_dim < n_agents) at config time.
  if (vs.hidden_dim < 1) throw ConfigError("variant.hidden_dim must be >= 1");
  count_params(vs, dims_for(g));
  if (is_hyper(vs.kind) && vs.kind != VariantKind::kHyperLinear && vs.embed_dim != 0 &&
      vs.embed_dim < g.n_agents) {
    throw ConfigError("variant.embed_dim must be >= n_agents for orthogonal embeddings");
  }
  return r;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string RunSpec::canonical() const {
  const GameConfig& g = train.game;
  const VariantSpec& v = train.variant;
  std::ostringstream s;
  s << "diag.obs_cap=" << diag.obs_cap << "\n"
    << "diag.obs_episodes=" << diag.obs_episodes << "\n"
    << "game.horizon=" << g.horizon << "\n"
    << "game.kind=" << to_string(g.kind) << "\n"
    << "game.n_actions=" << g.n_actions << "\n"
    << "game.n_agents=" << g.n_agents << "\n"
    << "game.temporal=" << (g.temporal ? "true" : "false") << "\n"
    << "train.batch_size=" << train.batch_size << "\n"
    << "train.diag_window=" << train.diag_window << "\n"
    << "train.diagnostics=" << (train.diagnostics ? "true" : "false") << "\n"
    << "train.eval_episodes=" << train.eval_episodes << "\n"
    << "train.eval_interval=" << train.eval_interval << "\n"
    << "train.gamma=" << fmt_double(train.gamma) << "\n"
    << "train.lr=" << fmt_double(train.lr) << "\n"
    << "train.total_steps=" << train.total_steps << "\n"
    << "variant.embed_dim=" << v.embed_dim << "\n"
    << "variant.head_scale=" << fmt_double(v.head_scale) << "\n"
    << "variant.hidden_dim=" << v.hidden_dim << "\n"
    << "variant.hyper_hidden_dim=" << v.hyper_hidden_dim << "\n"
    << "variant.kind=" << to_string(v.kind) << "\n"
    << "variant.reset_fan_init=" << (v.reset_fan_init ? "true" : "false") << "\n";
  return s.str();
}

std::string RunSpec::key() const {
  char hash[20];
  std::snprintf(hash, sizeof hash, "%08llx",
                static_cast<unsigned long long>(fnv1a(canonical()) & 0xffffffffULL));
  return to_string(train.game.kind) + "_n" + std::to_string(train.game.n_agents) + "_" +
         to_string(train.variant.kind) + "_h" + std::to_string(train.variant.hidden_dim) + "_" +
         hash;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  const std::string t = trim(text);
  std::vector<std::uint64_t> seeds;
  if (t.find(',') == std::string::npos) {
    const std::uint64_t n = parse_u64("seeds", t);
    if (n == 0) throw ConfigError("seed count must be >= 1");
    for (std::uint64_t i = 0; i < n; ++i) seeds.push_back(i);
    return seeds;
  }
  for (const auto& s : split_commas(t)) seeds.push_back(parse_u64("seeds", s));
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("seed list contains duplicates");
  }
  return seeds;
}

ExperimentSpec build_experiment(const ConfigMap& config) {
  const auto& gk = grid_keys();
  const auto& sk = scalar_keys();
  for (const auto& [k, v] : config) {
    if (std::find(gk.begin(), gk.end(), k) == gk.end() &&
        std::find(sk.begin(), sk.end(), k) == sk.end()) {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }

  ExperimentSpec spec;
  spec.seeds = parse_seed_list("10");
  if (auto it = config.find("train.seeds"); it != config.end()) spec.seeds = parse_seed_list(it->second);
  if (auto it = config.find("train.seed_list"); it != config.end()) {
    spec.seeds.clear();
    for (const auto& s : split_commas(it->second)) spec.seeds.push_back(parse_u64("train.seed_list", s));
  }
  if (auto it = config.find("experiment.master_seed"); it != config.end()) {
    spec.master_seed = parse_u64("experiment.master_seed", it->second);
  }
  if (auto it = config.find("experiment.out"); it != config.end()) spec.out_dir = it->second;
  if (auto it = config.find("experiment.jobs"); it != config.end()) {
    spec.jobs = static_cast<int>(parse_int("experiment.jobs", it->second));
    if (spec.jobs < 0) throw ConfigError("experiment.jobs must be >= 0");
  }

  // Cartesian product over grid keys, in grid_keys() order.
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const auto& k : gk) {
    if (auto it = config.find(k); it != config.end()) axes.emplace_back(k, split_commas(it->second));
  }
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    ConfigMap point;
    for (std::size_t a = 0; a < axes.size(); ++a) point[axes[a].first] = axes[a].second[idx[a]];
    spec.configs.push_back(run_spec_from(point));
    std::size_t a = axes.size();
    bool carry = true;
    while (carry && a > 0) {
      --a;
      if (++idx[a] < axes[a].second.size()) {
        carry = false;
      } else {
        idx[a] = 0;
      }
    }
    if (carry) break;
  }
  return spec;
}

std::uint64_t master_seed_from_env(std::uint64_t fallback) {
  const char* v = std::getenv(kSeedEnvVar);
  if (v == nullptr || *v == '\0') return fallback;
  return parse_u64(kSeedEnvVar, v);
}

std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t seed_id) {
  return mix64(master_seed ^ mix64(seed_id));
}

std::string run_directory(const std::string& out_dir, const RunSpec& spec, std::uint64_t seed_id) {
  return (fs::path(out_dir) / spec.key() / ("seed_" + std::to_string(seed_id))).string();
}

// ---------------------------------------------------------------------------
// Running

namespace {

json num(double x) { return std::isnan(x) ? json(nullptr) : json(x); }
double from_json(const json& j) { return j.is_number() ? j.get<double>() : kMissing; }

std::string curve_csv(const TrainLog& log) {
  std::string s = csv_line({"update", "train_reward_mean", "eval_reward_sampled",
                            "eval_reward_argmax", "grad_conflict_mean", "grad_variance_mean",
                            "embed_cos_distance"});
  for (const EvalRecord& r : log.curve) {
    s += csv_line({std::to_string(r.update), format_csv_number(r.train_reward_mean),
                   format_csv_number(r.eval_reward_sampled),
                   format_csv_number(r.eval_reward_argmax),
                   format_csv_number(r.grad_conflict_mean),
                   format_csv_number(r.grad_variance_mean),
                   format_csv_number(r.embed_cos_distance)});
  }
  return s;
}

std::string diag_csv(const TrainLog& log) {
  std::string s = csv_line({"update", "window", "grad_conflict_mean", "grad_conflict_min",
                            "zero_norm_pairs", "grad_variance_mean", "embed_cos_distance"});
  for (const EvalRecord& r : log.curve) {
    s += csv_line({std::to_string(r.update), std::to_string(r.window),
                   format_csv_number(r.grad_conflict_mean), format_csv_number(r.grad_conflict_min),
                   std::to_string(r.zero_norm_pairs), format_csv_number(r.grad_variance_mean),
                   format_csv_number(r.embed_cos_distance)});
  }
  return s;
}

}  // namespace

RunOutcome run_one(const RunSpec& spec, std::uint64_t seed_id, std::uint64_t master_seed,
                   const std::string& out_dir, bool force) {
  RunOutcome out;
  out.dir = run_directory(out_dir, spec, seed_id);
  const fs::path dir(out.dir);
  if (!force && fs::exists(dir / "final.json")) {
    out.skipped = true;
    const json f = json::parse(read_file((dir / "final.json").string()));
    out.aborted = f.value("status", "") == "aborted";
    return out;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + out.dir + ": " + ec.message());
  fs::remove(dir / "final.json", ec);

  TrainConfig tc = spec.train;
  tc.seed = derive_run_seed(master_seed, seed_id);

  json cfg;
  cfg["key"] = spec.key();
  cfg["seed_id"] = seed_id;
  cfg["master_seed"] = master_seed;
  cfg["run_seed"] = tc.seed;
  std::istringstream lines(spec.canonical());
  std::string line;
  json flat = json::object();
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    flat[line.substr(0, eq)] = line.substr(eq + 1);
  }
  cfg["config"] = flat;
  cfg["canonical"] = spec.canonical();
  write_file_atomic((dir / "config.json").string(), cfg.dump(2) + "\n");

  const TrainLog log = train(tc);
  write_file_atomic((dir / "curve.csv").string(), curve_csv(log));
  write_file_atomic((dir / "diag.csv").string(), diag_csv(log));

  const Policy& policy = *log.final_policy;
  save_checkpoint(policy, (dir / "policy.ckpt").string());

  const EvalRecord& last = log.curve.back();
  json fin;
  fin["status"] = log.aborted() ? "aborted" : "ok";
  fin["final_update"] = last.update;
  fin["eval_reward_sampled"] = num(last.eval_reward_sampled);
  fin["eval_reward_argmax"] = num(last.eval_reward_argmax);
  fin["grad_conflict_mean"] = num(last.grad_conflict_mean);
  fin["grad_variance_mean"] = num(last.grad_variance_mean);
  fin["embed_cos_distance"] = num(last.embed_cos_distance);
  double snd_jsd = kMissing;
  double snd_tvd = kMissing;
  std::size_t n_obs = 0;
  if (log.aborted()) {
    fin["abort"] = {{"update", log.abort->update}, {"statistic", log.abort->statistic}};
    out.aborted = true;
  } else if (spec.diag.obs_episodes > 0) {
    Rng drng(mix64(tc.seed ^ 0xd1a9e5ULL));
    const ObservationSet obs =
        collect_observation_set(tc.game, {&policy}, spec.diag.obs_episodes, spec.diag.obs_cap, drng);
    snd_jsd = snd(policy, obs, Distance::kJSD).value;
    snd_tvd = snd(policy, obs, Distance::kTVD).value;
    n_obs = obs.size();
  }
  fin["snd_jsd"] = num(snd_jsd);
  fin["snd_tvd"] = num(snd_tvd);
  fin["snd_observations"] = n_obs;
  write_file_atomic((dir / "final.json").string(), fin.dump(2) + "\n");
  return out;
}

RunSummary run_experiment(const ExperimentSpec& spec, std::ostream* progress) {
  if (spec.configs.empty()) throw ConfigError("experiment has no configurations");
  if (spec.seeds.empty()) throw ConfigError("experiment has no seeds");
  std::error_code ec;
  fs::create_directories(spec.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + spec.out_dir + ": " + ec.message());

  struct Task {
    std::size_t config;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < spec.configs.size(); ++c) {
    for (std::uint64_t s : spec.seeds) tasks.push_back({c, s});
  }

  RunSummary summary;
  summary.runs.resize(tasks.size());
  int jobs = spec.jobs > 0 ? spec.jobs : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp(jobs, 1, static_cast<int>(tasks.size()));

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  std::size_t done = 0;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      const Task& t = tasks[i];
      const auto start = std::chrono::steady_clock::now();
      try {
        summary.runs[i] = run_one(spec.configs[t.config], t.seed, spec.master_seed, spec.out_dir,
                                  spec.force);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::lock_guard<std::mutex> lock(mu);
      ++done;
      if (progress) {
        const RunOutcome& r = summary.runs[i];
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.1fs", secs);
        *progress << "[" << done << "/" << tasks.size() << "] " << spec.configs[t.config].key()
                  << " seed " << t.seed << ": "
                  << (r.skipped ? "skipped" : (r.aborted ? "ABORTED" : "done")) << " (" << buf
                  << ")\n";
        progress->flush();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  for (const RunOutcome& r : summary.runs) {
    if (r.skipped) {
      ++summary.skipped;
    } else {
      ++summary.executed;
    }
    if (r.aborted) ++summary.aborted;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Aggregation

MeanCI mean_ci95(const std::vector<double>& values) {
  if (values.empty()) throw InputError("no values to aggregate");
  MeanCI r;
  const double k = static_cast<double>(values.size());
  double s = 0.0;
  for (double v : values) s += v;
  r.mean = s / k;
  if (values.size() == 1) {
    r.single = true;
    return r;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  const double sd = std::sqrt(ss / (k - 1.0));
  const boost::math::students_t dist(k - 1.0);
  r.half_width = boost::math::quantile(dist, 0.975) * sd / std::sqrt(k);
  return r;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  int c = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      s += x;
      ++c;
    }
  }
  return c ? s / c : kMissing;
}

bool is_table1_default(const json& cfg) {
  const json& c = cfg.at("config");
  ConfigMap m;
  m["game.kind"] = c.at("game.kind").get<std::string>();
  m["game.n_agents"] = c.at("game.n_agents").get<std::string>();
  m["variant.kind"] = c.at("variant.kind").get<std::string>();
  RunSpec def = run_spec_from(m);
  // Diagnostics settings do not change the trained policy or its reward.
  const std::string mine = cfg.at("canonical").get<std::string>();
  auto strip = [](const std::string& s) {
    std::istringstream in(s);
    std::string line, out;
    while (std::getline(in, line)) {
      if (line.rfind("diag.", 0) == 0 || line.rfind("train.diag", 0) == 0) continue;
      out += line + "\n";
    }
    return out;
  };
  return strip(mine) == strip(def.canonical());
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::string& run_dir) {
  if (!fs::is_directory(run_dir)) throw InputError("no run directory at " + run_dir);
  std::vector<fs::path> keys;
  for (const auto& e : fs::directory_iterator(run_dir)) {
    if (e.is_directory()) keys.push_back(e.path());
  }
  std::sort(keys.begin(), keys.end());

  std::vector<AggregateRow> rows;
  for (const fs::path& kd : keys) {
    std::vector<std::pair<std::uint64_t, fs::path>> seeds;
    for (const auto& e : fs::directory_iterator(kd)) {
      const std::string name = e.path().filename().string();
      if (!e.is_directory() || name.rfind("seed_", 0) != 0) continue;
      if (!fs::exists(e.path() / "final.json")) continue;
      seeds.emplace_back(std::stoull(name.substr(5)), e.path());
    }
    if (seeds.empty()) continue;
    std::sort(seeds.begin(), seeds.end());

    AggregateRow row;
    row.key = kd.filename().string();
    std::vector<double> conflict, variance, jsd, tvdv, embed;
    for (const auto& [id, sd] : seeds) {
      const json cfg = json::parse(read_file((sd / "config.json").string()));
      const json fin = json::parse(read_file((sd / "final.json").string()));
      if (row.game.empty()) {
        const json& c = cfg.at("config");
        row.game = c.at("game.kind").get<std::string>();
        row.n_agents = std::stoi(c.at("game.n_agents").get<std::string>());
        row.variant = c.at("variant.kind").get<std::string>();
        row.table1_defaults = is_table1_default(cfg);
      }
      if (fin.value("status", "") != "ok") {
        ++row.aborted;
        continue;
      }
      row.seed_ids.push_back(id);
      row.finals.push_back(from_json(fin.at("eval_reward_sampled")));
      row.finals_argmax.push_back(from_json(fin.at("eval_reward_argmax")));
      conflict.push_back(from_json(fin.at("grad_conflict_mean")));
      variance.push_back(from_json(fin.at("grad_variance_mean")));
      jsd.push_back(from_json(fin.at("snd_jsd")));
      tvdv.push_back(from_json(fin.at("snd_tvd")));
      embed.push_back(from_json(fin.at("embed_cos_distance")));
    }
    if (!row.finals.empty()) {
      row.reward = mean_ci95(row.finals);
      row.reward_argmax = mean_ci95(row.finals_argmax);
    }
    row.grad_conflict_mean = mean_of(conflict);
    row.grad_variance_mean = mean_of(variance);
    row.snd_jsd = mean_of(jsd);
    row.snd_tvd = mean_of(tvdv);
    row.embed_cos_distance = mean_of(embed);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("no completed runs under " + run_dir);
  return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string s = csv_line({"key", "game", "n_agents", "variant", "table1_defaults", "seeds",
                            "mean", "ci95", "mean_argmax", "ci95_argmax", "single_seed",
                            "aborted", "grad_conflict_mean", "grad_variance_mean", "snd_jsd",
                            "snd_tvd", "embed_cos_distance"});
  for (const auto& r : rows) {
    const bool any = !r.finals.empty();
    s += csv_line({r.key, r.game, std::to_string(r.n_agents), r.variant,
                   r.table1_defaults ? "1" : "0", std::to_string(r.finals.size()),
                   any ? format_csv_number(r.reward.mean) : "",
                   any ? format_csv_number(r.reward.half_width) : "",
                   any ? format_csv_number(r.reward_argmax.mean) : "",
                   any ? format_csv_number(r.reward_argmax.half_width) : "",
                   r.reward.single ? "1" : "0", std::to_string(r.aborted),
                   format_csv_number(r.grad_conflict_mean), format_csv_number(r.grad_variance_mean),
                   format_csv_number(r.snd_jsd), format_csv_number(r.snd_tvd),
                   format_csv_number(r.embed_cos_distance)});
  }
  return s;
}

std::string aggregate_json(const std::vector<AggregateRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j;
    j["key"] = r.key;
    j["game"] = r.game;
    j["n_agents"] = r.n_agents;
    j["variant"] = r.variant;
    j["table1_defaults"] = r.table1_defaults;
    j["seed_ids"] = r.seed_ids;
    j["finals"] = r.finals;
    j["finals_argmax"] = r.finals_argmax;
    j["mean"] = r.finals.empty() ? json(nullptr) : json(r.reward.mean);
    j["ci95"] = r.finals.empty() ? json(nullptr) : json(r.reward.half_width);
    j["mean_argmax"] = r.finals.empty() ? json(nullptr) : json(r.reward_argmax.mean);
    j["ci95_argmax"] = r.finals.empty() ? json(nullptr) : json(r.reward_argmax.half_width);
    j["single_seed"] = r.reward.single;
    j["aborted"] = r.aborted;
    j["grad_conflict_mean"] = num(r.grad_conflict_mean);
    j["grad_variance_mean"] = num(r.grad_variance_mean);
    j["snd_jsd"] = num(r.snd_jsd);
    j["snd_tvd"] = num(r.snd_tvd);
    j["embed_cos_distance"] = num(r.embed_cos_distance);
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

void write_aggregate(const std::string& run_dir, const std::vector<AggregateRow>& rows) {
  write_file_atomic((fs::path(run_dir) / "aggregate.csv").string(), aggregate_csv(rows));
  write_file_atomic((fs::path(run_dir) / "aggregate.json").string(), aggregate_json(rows));
}

// ---------------------------------------------------------------------------
// table1 bands

bool Table1Report::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

std::string Table1Report::json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : verdicts) arr.push_back({{"check", v.check}, {"pass", v.pass}, {"detail", v.detail}});
  nlohmann::json j;
  j["all_pass"] = all_pass();
  j["verdicts"] = arr;
  return j.dump(2) + "\n";
}

Table1Report verify_table1(const std::vector<AggregateRow>& rows) {
  const std::vector<int> ns = {2, 4, 8, 16};
  const std::vector<std::string> games = {"spec", "sync"};
  const std::vector<std::string> variants = {"nops", "fups", "fups_id"};

  std::map<std::string, const AggregateRow*> cells;
  for (const auto& r : rows) {
    if (!r.table1_defaults || r.finals.empty()) continue;
    cells.emplace(r.game + "/" + std::to_string(r.n_agents) + "/" + r.variant, &r);
  }
  std::vector<std::string> missing;
  for (const auto& g : games) {
    for (int n : ns) {
      for (const auto& v : variants) {
        const std::string k = g + "/" + std::to_string(n) + "/" + v;
        if (!cells.count(k)) missing.push_back(k);
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "table1 grid incomplete; missing cells:";
    for (const auto& m : missing) msg += " " + m;
    throw IncompleteGridError(msg);
  }
  auto cell = [&](const std::string& g, int n, const std::string& v) {
    return cells.at(g + "/" + std::to_string(n) + "/" + v);
  };
  auto f = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return std::string(buf);
  };

  Table1Report rep;
  for (int n : ns) {
    const AggregateRow* c = cell("sync", n, "fups");
    rep.verdicts.push_back({"sync_fups_n" + std::to_string(n) + " >= 0.95",
                            c->reward.mean >= 0.95,
                            "mean " + f(c->reward.mean) + " +- " + f(c->reward.half_width)});
  }
  for (int n : ns) {
    const AggregateRow* c = cell("spec", n, "fups");
    const double lo = 1.0 / n - 0.02;
    rep.verdicts.push_back({"spec_fups_n" + std::to_string(n) + " in [" + f(lo) + ", 0.76]",
                            c->reward.mean >= lo && c->reward.mean <= 0.76,
                            "mean " + f(c->reward.mean) + " +- " + f(c->reward.half_width)});
  }
  for (int n : ns) {
    const double a = cell("spec", n, "nops")->reward.mean;
    const double b = cell("spec", n, "fups_id")->reward.mean;
    const double c = cell("spec", n, "fups")->reward.mean;
    rep.verdicts.push_back({"spec_order_n" + std::to_string(n) + " nops > fups_id > fups",
                            a > b && b > c,
                            "nops " + f(a) + ", fups_id " + f(b) + ", fups " + f(c)});
  }
  const AggregateRow* c = cell("spec", 2, "nops");
  rep.verdicts.push_back({"spec_nops_n2 >= 0.80", c->reward.mean >= 0.80,
                          "mean " + f(c->reward.mean) + " +- " + f(c->reward.half_width)});
  return rep;
}

// ---------------------------------------------------------------------------
// Tables

std::string profiles_csv(int n_agents) {
  if (n_agents < 2) throw InputError("profiles need n >= 2");
  std::string s = csv_line({"k", "specialisation", "synchronisation"});
  for (int k = 1; k <= n_agents; ++k) {
    s += csv_line({std::to_string(k),
                   format_csv_number(reward_for_count(GameKind::kSpecialisation, n_agents, k)),
                   format_csv_number(reward_for_count(GameKind::kSynchronisation, n_agents, k))});
  }
  return s;
}

std::string param_counts_csv() {
  std::string s = csv_line({"n_agents", "variant", "hidden_dim", "params"});
  const VariantKind kinds[] = {VariantKind::kNoPS,        VariantKind::kFuPS,
                               VariantKind::kFuPSID,      VariantKind::kFuPSIDNoState,
                               VariantKind::kHyperLinear, VariantKind::kHyperMLP,
                               VariantKind::kHyperMLPNoDecouple};
  for (int n : {2, 4, 8, 16}) {
    const PolicyDims d = dims_for(make_game(GameKind::kSpecialisation, n));
    for (VariantKind k : kinds) {
      const VariantSpec v = default_variant(k, n);
      s += csv_line({std::to_string(n), to_string(k), std::to_string(v.hidden_dim),
                     std::to_string(count_params(v, d))});
    }
  }
  return s;
}

std::string distances_demo_csv() {
  auto join = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ";";
      s += format_csv_number(v[i]);
    }
    return s;
  };
  std::string s = csv_line({"step", "p", "q", "tvd", "jsd"});
  for (const DistanceRow& r : distances_demo()) {
    s += csv_line({std::to_string(r.step), join(r.p), join(r.q), format_csv_number(r.tvd),
                   format_csv_number(r.jsd)});
  }
  return s;
}

}  // namespace hmlab
