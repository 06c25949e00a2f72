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

// hypermarl-lab: experiment runner CLI.
//
// Exit codes: 0 ok, 1 table1 band failure or other error, 2 config error,
// 3 incomplete grid, 4 numeric abort.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hmlab/errors.hpp"
#include "hmlab/experiment.hpp"
#include "hmlab/io.hpp"

namespace {

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIncomplete = 3;
constexpr int kExitAbort = 4;

struct Options {
  std::string config;
  std::string out;
  std::string seeds;
  int jobs = -1;
  bool force = false;
  int n = 5;
};

int cmd_run(const Options& o) {
  hmlab::ConfigMap cfg = hmlab::load_config_file(o.config);
  hmlab::ExperimentSpec spec = hmlab::build_experiment(cfg);
  if (!o.seeds.empty()) spec.seeds = hmlab::parse_seed_list(o.seeds);
  if (!o.out.empty()) spec.out_dir = o.out;
  if (o.jobs >= 0) spec.jobs = o.jobs;
  spec.force = o.force;
  spec.master_seed = hmlab::master_seed_from_env(spec.master_seed);

  std::cerr << spec.configs.size() << " config(s) x " << spec.seeds.size() << " seed(s) -> "
            << spec.out_dir << "\n";
  const hmlab::RunSummary s = hmlab::run_experiment(spec, &std::cerr);
  std::cout << "executed " << s.executed << ", skipped " << s.skipped << ", aborted " << s.aborted
            << "\n";
  return s.aborted > 0 ? kExitAbort : 0;
}

int cmd_aggregate(const Options& o) {
  const std::string dir = o.out.empty() ? "runs" : o.out;
  const auto rows = hmlab::aggregate(dir);
  hmlab::write_aggregate(dir, rows);
  std::cout << hmlab::aggregate_csv(rows);
  return 0;
}

int cmd_verify(const Options& o) {
  const std::string dir = o.out.empty() ? "runs" : o.out;
  const auto rows = hmlab::aggregate(dir);
  hmlab::write_aggregate(dir, rows);
  const hmlab::Table1Report rep = hmlab::verify_table1(rows);
  hmlab::write_file_atomic((std::filesystem::path(dir) / "table1_verdict.json").string(),
                           rep.json());
  for (const auto& v : rep.verdicts) {
    std::cout << (v.pass ? "PASS " : "FAIL ") << v.check << "  (" << v.detail << ")\n";
  }
  std::cout << (rep.all_pass() ? "table1: all bands pass\n" : "table1: some bands fail\n");
  return rep.all_pass() ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypermarl-lab: parameter-sharing experiments on specialisation games"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "run directory");
  };

  CLI::App* run = app.add_subcommand("run", "train every (config, seed) in a grid");
  run->add_option("--config", o.config, "config file (key=value lines or JSON)")->required();
  add_common(run);
  run->add_option("--seeds", o.seeds, "seed count N or list a,b,c");
  run->add_option("--jobs", o.jobs, "parallel runs (0: all cores)")->check(CLI::NonNegativeNumber);
  run->add_flag("--force", o.force, "re-run completed runs");

  CLI::App* agg = app.add_subcommand("aggregate", "mean and 95% CI per config");
  add_common(agg);
  CLI::App* ver = app.add_subcommand("verify-table1", "check the table1 result bands");
  add_common(ver);
  CLI::App* prof = app.add_subcommand("profiles", "reward vs number of agents sharing an action");
  prof->add_option("-n,--agents", o.n, "number of agents")->check(CLI::Range(2, 1 << 20));
  app.add_subcommand("param-counts", "parameter count per variant and n");
  app.add_subcommand("distances-demo", "TVD vs JSD on a shifting distribution");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(o);
    if (*agg) return cmd_aggregate(o);
    if (*ver) return cmd_verify(o);
    if (*prof) {
      std::cout << hmlab::profiles_csv(o.n);
      return 0;
    }
    if (app.got_subcommand("param-counts")) {
      std::cout << hmlab::param_counts_csv();
      return 0;
    }
    if (app.got_subcommand("distances-demo")) {
      std::cout << hmlab::distances_demo_csv();
      return 0;
    }
  } catch (const hmlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const hmlab::IncompleteGridError& e) {
    std::cerr << "incomplete grid: " << e.what() << "\n";
    return kExitIncomplete;
  } catch (const hmlab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitFail;
}
