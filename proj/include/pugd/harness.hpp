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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pugd/config.hpp"
#include "pugd/landscape.hpp"
#include "pugd/mnist.hpp"
#include "pugd/models.hpp"
#include "pugd/optimizers.hpp"
#include "pugd/svg.hpp"

namespace pugd {

/// A StepRecord broke an optimizer invariant (unit step length, d_t <= 2).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Throws InvariantViolation when a record breaks the optimizer guarantees:
/// unflagged ugd/ngd_fm/pugd steps move exactly lr (1e-9), their normalized
/// direction has dual-norm 1 (1e-9), d_t <= 2 + 1e-9, pugd perturbations
/// have dual-norm 1 (1e-9).
void verify_step_invariants(const StepRecord& rec, OptimizerKind kind);

struct TrainingData {
  Dataset train;
  Dataset test;
  Batch train_batch;  // the whole training subset
  Batch test_batch;   // the whole test subset
};

/// First data.train_subset / data.test_subset samples of MNIST.
TrainingData load_training_data(const ExperimentConfig& cfg);
TrainingData make_training_data(Dataset train, Dataset test);

struct Evaluation {
  std::size_t step = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainOptions {
  std::size_t iterations = 1;
  std::size_t batch_size = 100;
  std::uint64_t shuffle_seed = 0;
  Schedule schedule;  // total_steps is filled in by train_run
  ScheduleGranularity granularity = ScheduleGranularity::step;
  LossKind loss = LossKind::mse;
  /// Keep the parameters before every step t with t % stride == 0 (0: never).
  std::size_t snapshot_stride = 0;
  /// Evaluate on the full subsets every this many steps (0: only at the end).
  std::size_t eval_stride = 0;
  bool check_invariants = true;
};

struct OptimizerRun {
  OptimizerConfig config;
  std::vector<StepRecord> steps;
  std::vector<Evaluation> evaluations;  // last entry is the final state
  std::vector<RaggedTensor> snapshots;
  std::vector<std::size_t> snapshot_steps;
  RaggedTensor initial_params;
  RaggedTensor final_params;
  OptimizerState final_state;
  /// Adagrad accumulator after the first step.
  std::optional<RaggedTensor> first_adagrad_accum;

  const Evaluation& final_evaluation() const { return evaluations.back(); }
};

/// Trains from `init` for opts.iterations steps. Full-batch when the batch
/// size covers the subset, otherwise shuffled mini-batches per epoch (the
/// last partial batch is dropped).
OptimizerRun train_run(const Mlp& arch, const RaggedTensor& init,
                       const OptimizerConfig& cfg, const TrainingData& data,
                       const TrainOptions& opts);

/// Largest grad dual-norm over the last ceil(n/10) steps.
double final_decile_max_grad_norm(const std::vector<StepRecord>& steps);

/// Largest ratio, over elements that saw a non-zero gradient on the first
/// step, of 1/(sqrt(accum)+eps) at the end versus after the first step.
std::optional<double> adagrad_step_ratio(const OptimizerRun& run);

struct RunLog {
  std::vector<OptimizerRun> runs;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

struct RaceSummary {
  std::string optimizer;
  std::size_t iterations = 0;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  double final_train_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  double final_decile_max_grad_norm = 0.0;
  std::optional<double> max_d_t;
  std::size_t flagged_steps = 0;
  double end_alpha = 0.0;
  double end_beta = 0.0;
  double flatness_variance = 0.0;
  std::optional<double> adagrad_step_ratio;
};

struct RaceResult {
  RunLog log;
  RaggedTensor anchor;
  DirectionPair pair;
  LandscapeGrid grid;
  std::vector<Trajectory> trajectories;
  std::vector<RaceSummary> summary;
};

struct LandscapeResult {
  RunLog log;
  RaggedTensor anchor;
  DirectionPair pair;
  LandscapeGrid grid;
  /// Loss of the anchor on the training subset.
  double anchor_train_loss = 0.0;
};

struct TrajectoryResult {
  RunLog log;
  std::vector<LandscapeGrid> grids;        // one per optimizer
  std::vector<Trajectory> trajectories;    // one per optimizer
  std::vector<DirectionPair> pairs;
};

/// Each experiment writes its CSV/JSON/SVG artifacts below cfg.output_dir,
/// together with resolved_config.txt and run_meta.json. Artifacts other than
/// run_meta.json (which records wall time) are byte-identical for a given
/// config and seed, independent of cfg.threads.
RunLog run_train_history(const ExperimentConfig& cfg);
RaceResult run_shared_landscape_race(const ExperimentConfig& cfg);
LandscapeResult run_landscape_3d(const ExperimentConfig& cfg);
TrajectoryResult run_trajectory_2d(const ExperimentConfig& cfg);

/// Runs cfg.experiment and returns the output directory.
std::filesystem::path run_experiment(const ExperimentConfig& cfg);

// Artifact writers.
void write_steps_csv(const std::filesystem::path& path,
                     const std::vector<StepRecord>& steps);
void write_evaluations_csv(const std::filesystem::path& path,
                           const std::vector<Evaluation>& evals);
void write_grid_csv(const std::filesystem::path& path, const LandscapeGrid& grid);
nlohmann::ordered_json grid_to_json(const LandscapeGrid& grid);
void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& trajectory);
void write_text(const std::filesystem::path& path, const std::string& text);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CheckOptions {
  std::uint64_t seed = 0;
  /// MNIST directory; when empty or missing, a seeded synthetic dataset of
  /// the same shape is used.
  std::string data_root;
  std::size_t iterations = 500;
};

/// Fast invariant suite behind `pugd check`.
std::vector<CheckResult> run_invariant_checks(const CheckOptions& opts);

}  // namespace pugd
