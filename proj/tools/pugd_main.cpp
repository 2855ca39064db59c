/*
 * Copyright 2026 The pugd-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pugd/config.hpp"
#include "pugd/errors.hpp"
#include "pugd/harness.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> optimizers;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> threads;
  std::string data_root;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--optimizer", a.optimizers, "optimizer to run (repeatable)");
  cmd->add_option("--iterations", a.iterations,
                  "steps for non-perturbed optimizers (perturbed get half)");
  cmd->add_option("--threads", a.threads, "worker threads");
  cmd->add_option("--data-root", a.data_root, "MNIST IDX directory");
}

pugd::ExperimentConfig resolve(pugd::ExperimentKind kind, const CommonArgs& a) {
  pugd::ExperimentConfig cfg = pugd::default_config(kind);
  if (!a.config.empty()) {
    // the subcommand decides the experiment; everything else comes from the file
    pugd::KeyValueConfig kv = pugd::KeyValueConfig::load(a.config);
    kv.set("experiment", pugd::to_string(kind));
    cfg = pugd::ExperimentConfig::from_key_values(kv);
  }
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (!a.data_root.empty()) cfg.data.root = a.data_root;
  if (a.threads) cfg.threads = *a.threads;
  if (a.iterations) {
    cfg.iterations = *a.iterations;
    cfg.perturbed_iterations = std::max<std::size_t>(1, *a.iterations / 2);
  }
  if (!a.optimizers.empty()) {
    std::vector<pugd::OptimizerConfig> picked;
    for (const auto& name : a.optimizers) {
      const auto kind_opt = pugd::parse_optimizer_kind(name);
      pugd::OptimizerConfig oc;
      oc.kind = kind_opt;
      for (const auto& existing : cfg.optimizers)
        if (existing.kind == kind_opt) oc = existing;
      picked.push_back(oc);
    }
    cfg.optimizers = picked;
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pugd: unit-gradient optimizer laboratory"};
  app.require_subcommand(1);

  CommonArgs race_args, hist_args, land_args, traj_args;
  auto* race = app.add_subcommand("race", "shared-landscape race of all optimizers");
  auto* hist = app.add_subcommand("history", "per-optimizer training history");
  auto* land = app.add_subcommand("landscape", "2-D loss surface around an anchor");
  auto* traj = app.add_subcommand("trajectory", "trajectory projected on PCA directions");
  add_common(race, race_args);
  add_common(hist, hist_args);
  add_common(land, land_args);
  add_common(traj, traj_args);

  auto* check = app.add_subcommand("check", "run the invariant suite");
  pugd::CheckOptions check_opts;
  check->add_option("--seed", check_opts.seed, "seed");
  check->add_option("--data-root", check_opts.data_root, "MNIST IDX directory");
  check->add_option("--iterations", check_opts.iterations, "training steps per run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) {
      if (check_opts.data_root.empty()) {
        if (const char* env = std::getenv("PUGD_DATA_ROOT")) check_opts.data_root = env;
      }
      bool ok = true;
      for (const auto& r : pugd::run_invariant_checks(check_opts)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }
    std::optional<pugd::ExperimentConfig> cfg;
    if (race->parsed())
      cfg = resolve(pugd::ExperimentKind::shared_landscape_race, race_args);
    else if (hist->parsed())
      cfg = resolve(pugd::ExperimentKind::train_history, hist_args);
    else if (land->parsed())
      cfg = resolve(pugd::ExperimentKind::landscape_3d, land_args);
    else
      cfg = resolve(pugd::ExperimentKind::trajectory_2d, traj_args);
    const auto out = pugd::run_experiment(*cfg);
    std::cout << "wrote " << out.string() << "\n";
    return 0;
  } catch (const pugd::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
