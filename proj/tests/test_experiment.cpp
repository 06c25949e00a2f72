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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "hmlab/checkpoint.hpp"
#include "hmlab/errors.hpp"
#include "hmlab/experiment.hpp"
#include "hmlab/io.hpp"

using namespace hmlab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("hmlab_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  return d;
}

ConfigMap kv(const std::string& text) {
  std::istringstream in(text);
  return parse_key_values(in);
}

const char* kTiny =
    "game.kind=spec\n"
    "game.n_agents=2\n"
    "variant.kind=fups,nops\n"
    "train.total_steps=20\n"
    "train.eval_interval=10\n"
    "train.eval_episodes=10\n"
    "train.diag_window=4\n"
    "diag.obs_episodes=5\n"
    "train.seeds=2\n";

}  // namespace

TEST(Config, KeyValueParsing) {
  const ConfigMap m = kv("# comment\n game.kind = sync  # trailing\n\nvariant.kind=fups\n");
  EXPECT_EQ(m.at("game.kind"), "sync");
  EXPECT_EQ(m.at("variant.kind"), "fups");
  EXPECT_THROW(kv("game.kind\n"), ConfigError);
}

TEST(Config, JsonParsingFlattens) {
  const ConfigMap m = parse_json_config(
      R"({"game": {"kind": "spec", "n_agents": [2, 4]}, "train": {"lr": 0.05, "diagnostics": false}})");
  EXPECT_EQ(m.at("game.kind"), "spec");
  EXPECT_EQ(m.at("game.n_agents"), "2,4");
  EXPECT_EQ(m.at("train.diagnostics"), "false");
  EXPECT_EQ(build_experiment(m).configs.size(), 2u);
  EXPECT_THROW(parse_json_config("{oops"), ConfigError);
}

TEST(Config, DefaultsFollowVariant) {
  const ExperimentSpec s = build_experiment(kv("game.n_agents=8\nvariant.kind=nops\n"));
  ASSERT_EQ(s.configs.size(), 1u);
  const TrainConfig& t = s.configs[0].train;
  EXPECT_EQ(t.variant.hidden_dim, 4);
  EXPECT_EQ(t.game.n_actions, 8);
  EXPECT_EQ(t.game.horizon, 10);
  EXPECT_EQ(t.total_steps, 10000);
  EXPECT_EQ(t.batch_size, 32);
  EXPECT_DOUBLE_EQ(t.lr, 0.01);
  EXPECT_EQ(s.seeds.size(), 10u);
  EXPECT_EQ(s.configs[0].diag.obs_episodes, 1000);
  const ExperimentSpec f = build_experiment(kv("game.n_agents=8\nvariant.kind=fups\n"));
  EXPECT_EQ(f.configs[0].train.variant.hidden_dim, 32);
}

TEST(Config, GridAndErrors) {
  const ExperimentSpec s = build_experiment(
      kv("game.kind=spec,sync\ngame.n_agents=2,4,8,16\nvariant.kind=nops,fups,fups_id\n"));
  EXPECT_EQ(s.configs.size(), 24u);
  std::set<std::string> keys;
  for (const auto& c : s.configs) keys.insert(c.key());
  EXPECT_EQ(keys.size(), 24u);
  EXPECT_THROW(build_experiment(kv("game.colour=red\n")), ConfigError);
  EXPECT_THROW(build_experiment(kv("train.lr=fast\n")), ConfigError);
  EXPECT_THROW(build_experiment(kv("train.gamma=2\n")), ConfigError);
  EXPECT_THROW(build_experiment(kv("variant.kind=hyper_mlp\nvariant.embed_dim=1\n")), ConfigError);
  EXPECT_THROW(build_experiment(kv("game.kind=poker\n")), ConfigError);
  EXPECT_THROW(load_config_file("/nonexistent/cfg"), ConfigError);
}

TEST(Config, KeyIsStableAndSensitive) {
  const RunSpec a = build_experiment(kv("variant.kind=fups\n")).configs[0];
  const RunSpec b = build_experiment(kv("variant.kind=fups\n")).configs[0];
  const RunSpec c = build_experiment(kv("variant.kind=fups\ntrain.lr=0.02\n")).configs[0];
  EXPECT_EQ(a.key(), b.key());
  EXPECT_NE(a.key(), c.key());
  EXPECT_EQ(a.key().rfind("spec_n2_fups_h8_", 0), 0u);
}

TEST(Seeds, ParsingAndDerivation) {
  EXPECT_EQ(parse_seed_list("3"), (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(parse_seed_list("7, 9,11"), (std::vector<std::uint64_t>{7, 9, 11}));
  EXPECT_THROW(parse_seed_list("0"), ConfigError);
  EXPECT_THROW(parse_seed_list("1,1"), ConfigError);
  EXPECT_THROW(parse_seed_list("x"), ConfigError);
  EXPECT_EQ(derive_run_seed(5, 3), derive_run_seed(5, 3));
  EXPECT_NE(derive_run_seed(5, 3), derive_run_seed(5, 4));
  EXPECT_NE(derive_run_seed(5, 3), derive_run_seed(6, 3));

  ::setenv(kSeedEnvVar, "123", 1);
  EXPECT_EQ(master_seed_from_env(9), 123u);
  ::unsetenv(kSeedEnvVar);
  EXPECT_EQ(master_seed_from_env(9), 9u);
}

TEST(Ci, HandComputedTInterval) {
  const std::vector<double> v = {0.91, 0.85, 0.88, 0.97, 0.79, 0.90, 0.84, 0.93, 0.87, 0.86};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= 10;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / 9);
  const double t9 = 2.2621571627409915;  // 0.975 quantile, 9 dof; tables give 2.262
  EXPECT_NEAR(t9, 2.262, 5e-4);
  const MeanCI ci = mean_ci95(v);
  EXPECT_NEAR(ci.mean, mean, 1e-12);
  EXPECT_NEAR(ci.half_width, t9 * sd / std::sqrt(10.0), 1e-9);
  EXPECT_FALSE(ci.single);
}

TEST(Ci, DegenerateCases) {
  const MeanCI flat = mean_ci95(std::vector<double>(10, 0.5));
  EXPECT_DOUBLE_EQ(flat.mean, 0.5);
  EXPECT_EQ(flat.half_width, 0.0);
  const MeanCI one = mean_ci95({0.7});
  EXPECT_TRUE(one.single);
  EXPECT_EQ(one.half_width, 0.0);
  EXPECT_THROW(mean_ci95({}), InputError);
}

TEST(Run, ArtifactsIdempotenceAndDeterminism) {
  const fs::path out = fresh_dir("run");
  ExperimentSpec spec = build_experiment(kv(kTiny));
  spec.out_dir = out.string();
  spec.jobs = 2;
  const RunSummary first = run_experiment(spec);
  EXPECT_EQ(first.executed, 4);
  EXPECT_EQ(first.skipped, 0);
  for (const auto& r : first.runs) {
    for (const char* f : {"config.json", "curve.csv", "diag.csv", "policy.ckpt", "final.json"}) {
      EXPECT_TRUE(fs::exists(fs::path(r.dir) / f)) << r.dir << "/" << f;
    }
  }
  const std::string curve = read_file((fs::path(first.runs[0].dir) / "curve.csv").string());
  EXPECT_EQ(curve.substr(0, curve.find('\n')),
            "update,train_reward_mean,eval_reward_sampled,eval_reward_argmax,grad_conflict_mean,"
            "grad_variance_mean,embed_cos_distance");

  const RunSummary again = run_experiment(spec);
  EXPECT_EQ(again.executed, 0);
  EXPECT_EQ(again.skipped, 4);

  spec.force = true;
  spec.jobs = 1;
  const RunSummary forced = run_experiment(spec);
  EXPECT_EQ(forced.executed, 4);
  EXPECT_EQ(read_file((fs::path(forced.runs[0].dir) / "curve.csv").string()), curve);

  const auto final_json =
      nlohmann::json::parse(read_file((fs::path(first.runs[0].dir) / "final.json").string()));
  EXPECT_EQ(final_json.at("status"), "ok");
  EXPECT_TRUE(final_json.at("snd_jsd").is_number());

  const Policy p = load_checkpoint((fs::path(first.runs[0].dir) / "policy.ckpt").string());
  EXPECT_EQ(p.num_params(), count_params(p.variant(), p.dims()));

  const auto rows = aggregate(out.string());
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.finals.size(), 2u);
    EXPECT_GE(r.reward.half_width, 0.0);
    EXPECT_FALSE(r.table1_defaults);
  }
  write_aggregate(out.string(), rows);
  EXPECT_TRUE(fs::exists(out / "aggregate.csv"));
  const auto agg = nlohmann::json::parse(read_file((out / "aggregate.json").string()));
  EXPECT_EQ(agg.size(), 2u);
  EXPECT_THROW(verify_table1(rows), IncompleteGridError);
  fs::remove_all(out);
}

TEST(Run, EmptyDirectoryIsInputError) {
  const fs::path out = fresh_dir("empty");
  fs::create_directories(out);
  EXPECT_THROW(aggregate(out.string()), InputError);
  fs::remove_all(out);
}

TEST(Checkpoint, RoundTripEveryVariant) {
  for (VariantKind k : {VariantKind::kNoPS, VariantKind::kFuPSID, VariantKind::kHyperLinear,
                        VariantKind::kHyperMLP, VariantKind::kHyperMLPNoDecouple}) {
    Rng rng(3);
    const Policy p = Policy::build(default_variant(k, 3), dims_for(make_game(GameKind::kSpecialisation, 3)), rng);
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    write_checkpoint(p, buf);
    const Policy q = read_checkpoint(buf);
    EXPECT_EQ(q.kind(), k);
    EXPECT_TRUE(std::equal(p.params().begin(), p.params().end(), q.params().begin()));
    const std::vector<double> obs(9, 0.0);
    EXPECT_EQ(action_distribution(p, 1, obs), action_distribution(q, 1, obs));
  }
  std::stringstream bad("not a checkpoint\n");
  EXPECT_THROW(read_checkpoint(bad), IoError);
}

namespace {

AggregateRow cell(const std::string& game, int n, const std::string& variant, double mean) {
  AggregateRow r;
  r.key = game + std::to_string(n) + variant;
  r.game = game;
  r.n_agents = n;
  r.variant = variant;
  r.table1_defaults = true;
  r.finals = std::vector<double>(10, mean);
  r.reward = mean_ci95(r.finals);
  return r;
}

std::vector<AggregateRow> full_grid() {
  std::vector<AggregateRow> rows;
  for (int n : {2, 4, 8, 16}) {
    rows.push_back(cell("spec", n, "nops", 0.9));
    rows.push_back(cell("spec", n, "fups_id", 0.8));
    rows.push_back(cell("spec", n, "fups", 1.0 / n));
    rows.push_back(cell("sync", n, "nops", 0.99));
    rows.push_back(cell("sync", n, "fups_id", 0.99));
    rows.push_back(cell("sync", n, "fups", 0.99));
  }
  return rows;
}

}  // namespace

TEST(Table1, BandsOnSyntheticGrid) {
  auto rows = full_grid();
  const Table1Report ok = verify_table1(rows);
  EXPECT_TRUE(ok.all_pass());
  EXPECT_EQ(ok.verdicts.size(), 13u);
  EXPECT_TRUE(nlohmann::json::parse(ok.json()).at("all_pass").get<bool>());

  for (auto& r : rows) {
    if (r.game == "spec" && r.n_agents == 2 && r.variant == "fups") r.reward.mean = 0.80;
  }
  const Table1Report bad = verify_table1(rows);
  EXPECT_FALSE(bad.all_pass());

  rows = full_grid();
  rows.pop_back();
  EXPECT_THROW(verify_table1(rows), IncompleteGridError);
  rows = full_grid();
  rows[0].table1_defaults = false;
  EXPECT_THROW(verify_table1(rows), IncompleteGridError);
}

TEST(Tables, ProfilesAndCounts) {
  const std::string p = profiles_csv(5);
  EXPECT_NE(p.find("1,1,0.2\n"), std::string::npos);
  EXPECT_NE(p.find("5,0.2,1\n"), std::string::npos);
  EXPECT_THROW(profiles_csv(1), InputError);
  EXPECT_NE(param_counts_csv().find("16,fups,64,17488\n"), std::string::npos);
  EXPECT_EQ(distances_demo_csv().rfind("step,p,q,tvd,jsd\n", 0), 0u);
}

TEST(Io, CsvNumbers) {
  EXPECT_EQ(format_csv_number(0.123456789), "0.123457");
  EXPECT_EQ(format_csv_number(std::nan("")), "");
  EXPECT_EQ(csv_line({"a", "b"}), "a,b\n");
}
