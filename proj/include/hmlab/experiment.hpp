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

// Experiment runner: configuration ingestion, seeded run grids, on-disk run
// artifacts, aggregation with Student-t confidence intervals, and the
// Band check for the table1 grid.
//
// Config files are flat `dotted.key=value` lines ('#' starts a comment). A
// comma-separated value on any game./variant./train./diag. key expands into
// a Cartesian grid. JSON objects are accepted too and flattened to the same
// keys.
//
// Run directory layout:
//   <out>/<config key>/seed_<id>/{config.json, curve.csv, diag.csv,
//                                 policy.ckpt, final.json}
// final.json is written last and marks the run complete.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hmlab/training.hpp"

namespace hmlab {

using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_key_values(std::istream& in);
ConfigMap parse_json_config(const std::string& text);
// Chooses the parser from the first non-blank character ('{' means JSON).
ConfigMap load_config_file(const std::string& path);

struct DiagSettings {
  int obs_episodes = 1000;
  std::size_t obs_cap = 10000;
};

struct RunSpec {
  TrainConfig train;  // train.seed is set per run
  DiagSettings diag;

  // Canonical `key=value` listing of every field that affects results.
  std::string canonical() const;
  // Readable prefix plus a hash of canonical().
  std::string key() const;
};

struct ExperimentSpec {
  std::vector<RunSpec> configs;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "runs";
  int jobs = 0;  // 0: hardware concurrency
  std::uint64_t master_seed = 0;
  bool force = false;
};

// Throws ConfigError for unknown keys or malformed values.
ExperimentSpec build_experiment(const ConfigMap& config);

// "N" selects seeds 0..N-1, "a,b,c" lists them.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

inline constexpr const char* kSeedEnvVar = "HYPERMARL_LAB_SEED";
std::uint64_t master_seed_from_env(std::uint64_t fallback);

std::uint64_t derive_run_seed(std::uint64_t master_seed, std::uint64_t seed_id);

std::string run_directory(const std::string& out_dir, const RunSpec& spec, std::uint64_t seed_id);

struct RunOutcome {
  std::string dir;
  bool skipped = false;
  bool aborted = false;
};

// Trains one (config, seed) and writes its artifacts unless final.json is
// already present and `force` is false.
RunOutcome run_one(const RunSpec& spec, std::uint64_t seed_id, std::uint64_t master_seed,
                   const std::string& out_dir, bool force);

struct RunSummary {
  int executed = 0;
  int skipped = 0;
  int aborted = 0;
  std::vector<RunOutcome> runs;
};

RunSummary run_experiment(const ExperimentSpec& spec, std::ostream* progress = nullptr);

struct MeanCI {
  double mean = 0.0;
  double half_width = 0.0;
  bool single = false;
};

// 95% interval: t_{0.975, k-1} * s / sqrt(k).
MeanCI mean_ci95(const std::vector<double>& values);

struct AggregateRow {
  std::string key;
  std::string game;
  int n_agents = 0;
  std::string variant;
  bool table1_defaults = false;
  std::vector<std::uint64_t> seed_ids;
  std::vector<double> finals;         // sampled eval, one per completed seed
  std::vector<double> finals_argmax;
  MeanCI reward;
  MeanCI reward_argmax;
  int aborted = 0;
  double grad_conflict_mean = kMissing;
  double grad_variance_mean = kMissing;
  double snd_jsd = kMissing;
  double snd_tvd = kMissing;
  double embed_cos_distance = kMissing;
};

// Reads every completed run under `run_dir`. Throws InputError when none.
std::vector<AggregateRow> aggregate(const std::string& run_dir);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string aggregate_json(const std::vector<AggregateRow>& rows);
// Writes aggregate.csv and aggregate.json into run_dir.
void write_aggregate(const std::string& run_dir, const std::vector<AggregateRow>& rows);

struct Verdict {
  std::string check;
  bool pass = false;
  std::string detail;
};

struct Table1Report {
  std::vector<Verdict> verdicts;
  bool all_pass() const;
  std::string json() const;
};

// Throws IncompleteGridError naming every missing cell.
Table1Report verify_table1(const std::vector<AggregateRow>& rows);

std::string profiles_csv(int n_agents);
std::string param_counts_csv();
std::string distances_demo_csv();

}  // namespace hmlab
