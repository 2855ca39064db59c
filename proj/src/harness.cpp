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

#include "pugd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "pugd/errors.hpp"
#include "pugd/format.hpp"

namespace pugd {

namespace fs = std::filesystem;

namespace {

constexpr double kStepTolerance = 1e-9;

std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

// Runs body(i) for i in [0, n) on up to `threads` workers with a fixed
// strided assignment; the first exception is rethrown after joining.
template <typename Body>
void parallel_for(std::size_t n, std::size_t threads, Body&& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += threads) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Evaluation evaluate(const Mlp& arch, const RaggedTensor& params,
                    const TrainingData& data, LossKind kind, std::size_t step) {
  Evaluation e;
  e.step = step;
  e.train_loss = arch.loss_at(params, data.train_batch, kind);
  e.test_loss = arch.loss_at(params, data.test_batch, kind);
  e.train_accuracy = accuracy_at(arch, params, data.train_batch);
  e.test_accuracy = accuracy_at(arch, params, data.test_batch);
  return e;
}

std::vector<double> auto_axis(double lo, double hi, std::size_t n) {
  const double span = hi - lo;
  const double margin = std::max(0.1 * span, 1.0);
  return linspace(lo - margin, hi + margin, n);
}

// Keeps at most `limit` evenly strided points (always including the last).
Series decimate(std::string name, const std::vector<double>& x,
                const std::vector<double>& y, std::size_t limit = 500) {
  Series s;
  s.name = std::move(name);
  const std::size_t stride = std::max<std::size_t>(1, (x.size() + limit - 1) / limit);
  for (std::size_t i = 0; i < x.size(); i += stride) {
    s.x.push_back(x[i]);
    s.y.push_back(y[i]);
  }
  if (!x.empty() && (x.size() - 1) % stride != 0) {
    s.x.push_back(x.back());
    s.y.push_back(y.back());
  }
  return s;
}

std::vector<ChartPanel> history_panels(const std::vector<OptimizerRun>& runs) {
  ChartPanel grad{"grad dual-norm", "norm", true, {}};
  ChartPanel test{"test loss", "loss", true, {}};
  ChartPanel acc{"test accuracy", "accuracy", false, {}};
  for (const auto& run : runs) {
    const std::string name = to_string(run.config.kind);
    std::vector<double> x, y;
    for (const auto& r : run.steps) {
      x.push_back(static_cast<double>(r.step_index));
      y.push_back(r.grad_dual_norm);
    }
    grad.series.push_back(decimate(name, x, y));
    std::vector<double> ex, el, ea;
    for (const auto& e : run.evaluations) {
      ex.push_back(static_cast<double>(e.step));
      el.push_back(e.test_loss);
      ea.push_back(e.test_accuracy);
    }
    test.series.push_back(decimate(name, ex, el));
    acc.series.push_back(decimate(name, ex, ea));
  }
  return {grad, test, acc};
}

nlohmann::ordered_json model_meta(const ExperimentConfig& cfg) {
  nlohmann::ordered_json m;
  m["layers"] = cfg.model.layer_dims;
  m["activation"] = to_string(cfg.model.activation);
  m["loss"] = to_string(cfg.model.loss);
  return m;
}

nlohmann::ordered_json run_json(const OptimizerRun& run) {
  nlohmann::ordered_json j;
  const auto& f = run.final_evaluation();
  j["optimizer"] = to_string(run.config.kind);
  j["steps"] = run.steps.size();
  j["final_train_loss"] = f.train_loss;
  j["final_test_loss"] = f.test_loss;
  j["final_train_accuracy"] = f.train_accuracy;
  j["final_test_accuracy"] = f.test_accuracy;
  j["final_decile_max_grad_norm"] = final_decile_max_grad_norm(run.steps);
  std::size_t flagged = 0;
  double max_dt = -1.0;
  for (const auto& r : run.steps) {
    if (r.flagged()) ++flagged;
    if (r.d_t) max_dt = std::max(max_dt, *r.d_t);
  }
  j["flagged_steps"] = flagged;
  if (max_dt >= 0.0) j["max_d_t"] = max_dt;
  return j;
}

// Everything besides wall time goes into deterministic artifacts; wall time
// is kept in run_meta.json only.
void write_run_meta(const ExperimentConfig& cfg, const fs::path& out,
                    nlohmann::ordered_json extra, double seconds) {
  const std::string resolved = cfg.to_key_values().dump();
  write_text(out / "resolved_config.txt", resolved);
  nlohmann::ordered_json meta;
  meta["experiment"] = to_string(cfg.experiment);
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a64(resolved)));
  meta["config_hash"] = hash;
  meta["version"] = PUGD_VERSION;
  meta["seed"] = cfg.seed;
  meta["model"] = model_meta(cfg);
  meta["wall_time_seconds"] = seconds;
  for (auto& [k, v] : extra.items()) meta[k] = v;
  write_text(out / "run_meta.json", meta.dump(2) + "\n");
}

TrainOptions train_options(const ExperimentConfig& cfg, OptimizerKind kind) {
  TrainOptions o;
  o.iterations = cfg.iterations_for(kind);
  o.batch_size = cfg.batch_size;
  o.shuffle_seed = stream_seed(cfg.seed, RandomStream::shuffle);
  o.schedule = cfg.schedule;
  o.granularity = cfg.granularity;
  o.loss = cfg.model.loss;
  return o;
}

void write_run_files(const fs::path& dir, const OptimizerRun& run) {
  write_steps_csv(dir / "steps.csv", run.steps);
  write_evaluations_csv(dir / "evaluations.csv", run.evaluations);
}

Trajectory make_trajectory(const std::string& name, std::size_t stride,
                           const std::vector<std::size_t>& steps,
                           const std::vector<PlaneCoord>& coords,
                           const std::vector<RaggedTensor>& snapshots,
                           const Mlp& arch, const TrainingData& data,
                           LossKind kind) {
  Trajectory t;
  t.optimizer_name = name;
  t.sample_stride = stride;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    TrajectoryPoint p;
    p.step = steps[i];
    p.alpha = coords[i].alpha;
    p.beta = coords[i].beta;
    p.train_loss = arch.loss_at(snapshots[i], data.train_batch, kind);
    p.test_loss = arch.loss_at(snapshots[i], data.test_batch, kind);
    t.coords.push_back(p);
  }
  return t;
}

}  // namespace

void verify_step_invariants(const StepRecord& rec, OptimizerKind kind) {
  auto fail = [&](const std::string& what) {
    throw InvariantViolation(to_string(kind) + " step " +
                             std::to_string(rec.step_index) + ": " + what);
  };
  if (rec.d_t && *rec.d_t > kBoundedDifferenceLimit + kStepTolerance)
    fail("d_t " + format_double(*rec.d_t) + " exceeds 2");
  if (!is_unit_step(kind) || (rec.flags & kZeroNormUpdate)) return;
  if (std::abs(rec.update_dual_norm - rec.lr_used) > kStepTolerance)
    fail("update norm " + format_double(rec.update_dual_norm) + " != lr " +
         format_double(rec.lr_used));
  if (rec.direction_norm && std::abs(*rec.direction_norm - 1.0) > kStepTolerance)
    fail("direction norm " + format_double(*rec.direction_norm) + " != 1");
  if (kind == OptimizerKind::pugd && !(rec.flags & kPerturbationSkipped) &&
      rec.perturb_norm && std::abs(*rec.perturb_norm - 1.0) > kStepTolerance)
    fail("perturbation norm " + format_double(*rec.perturb_norm) + " != 1");
}

TrainingData make_training_data(Dataset train, Dataset test) {
  TrainingData d;
  d.train_batch = to_batch(train);
  d.test_batch = to_batch(test);
  d.train = std::move(train);
  d.test = std::move(test);
  return d;
}

TrainingData load_training_data(const ExperimentConfig& cfg) {
  const fs::path root = cfg.data_root();
  Dataset train = subset(load_mnist_split(root, "train"), cfg.data.train_subset);
  Dataset test = subset(load_mnist_split(root, "test"), cfg.data.test_subset);
  return make_training_data(std::move(train), std::move(test));
}

OptimizerRun train_run(const Mlp& arch, const RaggedTensor& init,
                       const OptimizerConfig& cfg, const TrainingData& data,
                       const TrainOptions& opts) {
  if (opts.iterations == 0) throw ConfigError("iterations must be >= 1");
  const std::size_t n = data.train.size();
  if (opts.batch_size == 0 || opts.batch_size > n)
    throw ConfigError("batch_size must be in [1, train subset size]");
  cfg.validate();

  const bool full_batch = opts.batch_size == n;
  const std::size_t per_epoch = n / opts.batch_size;

  Schedule sched = opts.schedule;
  sched.lr_max = cfg.lr_max;
  sched.total_steps = opts.granularity == ScheduleGranularity::step
                          ? opts.iterations
                          : (opts.iterations + per_epoch - 1) / per_epoch;
  sched.validate();

  OptimizerRun run;
  run.config = cfg;
  run.initial_params = init;
  run.steps.reserve(opts.iterations);

  RaggedTensor params = init;
  OptimizerState state;
  std::mt19937_64 shuffle_rng(opts.shuffle_seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Batch batch;
  if (full_batch) batch = data.train_batch;

  for (std::size_t t = 0; t < opts.iterations; ++t) {
    if (opts.snapshot_stride && t % opts.snapshot_stride == 0) {
      run.snapshots.push_back(params);
      run.snapshot_steps.push_back(t);
    }
    if (opts.eval_stride && t % opts.eval_stride == 0)
      run.evaluations.push_back(evaluate(arch, params, data, opts.loss, t));

    const std::size_t slot = t % per_epoch;
    if (!full_batch) {
      if (slot == 0) std::shuffle(order.begin(), order.end(), shuffle_rng);
      batch = to_batch(data.train,
                       std::span<const std::size_t>(order).subspan(
                           slot * opts.batch_size, opts.batch_size));
    }
    const double lr = opts.granularity == ScheduleGranularity::step
                          ? lr_at(sched, t)
                          : lr_at(sched, t / per_epoch);
    const GradientOracle oracle = [&](const RaggedTensor& w) {
      return arch.loss_and_grad_at(w, batch, opts.loss);
    };
    StepRecord rec = optimizer_step(params, oracle, lr, cfg, state);
    rec.step_index = t;
    if (opts.check_invariants) verify_step_invariants(rec, cfg.kind);
    if (t == 0 && state.adagrad_accum) run.first_adagrad_accum = *state.adagrad_accum;
    run.steps.push_back(std::move(rec));
  }
  run.evaluations.push_back(evaluate(arch, params, data, opts.loss, opts.iterations));
  run.final_params = std::move(params);
  run.final_state = std::move(state);
  return run;
}

double final_decile_max_grad_norm(const std::vector<StepRecord>& steps) {
  if (steps.empty()) return 0.0;
  const std::size_t k = (steps.size() + 9) / 10;
  double m = 0.0;
  for (std::size_t i = steps.size() - k; i < steps.size(); ++i)
    m = std::max(m, steps[i].grad_dual_norm);
  return m;
}

std::optional<double> adagrad_step_ratio(const OptimizerRun& run) {
  if (!run.first_adagrad_accum || !run.final_state.adagrad_accum) return std::nullopt;
  const auto first = run.first_adagrad_accum->flatten();
  const auto last = run.final_state.adagrad_accum->flatten();
  const double eps = run.config.eps;
  double worst = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] <= 0.0) continue;
    any = true;
    worst = std::max(worst, (std::sqrt(first[i]) + eps) / (std::sqrt(last[i]) + eps));
  }
  if (!any) return std::nullopt;
  return worst;
}

// ---------------------------------------------------------------- writers

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

void write_steps_csv(const fs::path& path, const std::vector<StepRecord>& steps) {
  std::string s = "step,lr,loss,grad_norm,update_norm,d_t,perturb_norm,flags\n";
  for (const auto& r : steps) {
    s += std::to_string(r.step_index) + ',' + format_double(r.lr_used) + ',' +
         format_double(r.loss_before) + ',' + format_double(r.grad_dual_norm) +
         ',' + format_double(r.update_dual_norm) + ',' + opt_field(r.d_t) + ',' +
         opt_field(r.perturb_norm) + ',' + flags_to_string(r.flags) + '\n';
  }
  write_text(path, s);
}

void write_evaluations_csv(const fs::path& path, const std::vector<Evaluation>& evals) {
  std::string s = "step,train_loss,test_loss,train_accuracy,test_accuracy\n";
  for (const auto& e : evals) {
    s += std::to_string(e.step) + ',' + format_double(e.train_loss) + ',' +
         format_double(e.test_loss) + ',' + format_double(e.train_accuracy) + ',' +
         format_double(e.test_accuracy) + '\n';
  }
  write_text(path, s);
}

void write_grid_csv(const fs::path& path, const LandscapeGrid& grid) {
  std::string s = "alpha,beta,train_loss,test_loss,clipped\n";
  for (std::size_t i = 0; i < grid.rows(); ++i) {
    for (std::size_t j = 0; j < grid.cols(); ++j) {
      const std::size_t k = i * grid.cols() + j;
      s += format_double(grid.alphas[i]) + ',' + format_double(grid.betas[j]) + ',' +
           format_double(grid.train_loss[k]) + ',' +
           (grid.test_loss ? format_double((*grid.test_loss)[k]) : std::string()) +
           ',' + std::to_string(grid.clipped[k]) + '\n';
    }
  }
  write_text(path, s);
}

nlohmann::ordered_json grid_to_json(const LandscapeGrid& grid) {
  auto rows_of = [&](const std::vector<double>& v) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < grid.rows(); ++i)
      out.push_back(std::vector<double>(v.begin() + i * grid.cols(),
                                        v.begin() + (i + 1) * grid.cols()));
    return out;
  };
  nlohmann::ordered_json j;
  j["alphas"] = grid.alphas;
  j["betas"] = grid.betas;
  j["train_loss"] = rows_of(grid.train_loss);
  if (grid.test_loss) j["test_loss"] = rows_of(*grid.test_loss);
  nlohmann::ordered_json clipped = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < grid.rows(); ++i)
    clipped.push_back(std::vector<int>(grid.clipped.begin() + i * grid.cols(),
                                       grid.clipped.begin() + (i + 1) * grid.cols()));
  j["clipped"] = clipped;
  j["anchor_meta"] = grid.anchor_meta;
  return j;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory) {
  std::string s = "step,alpha,beta,train_loss,test_loss\n";
  for (const auto& p : trajectory.coords) {
    s += std::to_string(p.step) + ',' + format_double(p.alpha) + ',' +
         format_double(p.beta) + ',' + format_double(p.train_loss) + ',' +
         format_double(p.test_loss) + '\n';
  }
  write_text(path, s);
}

// ------------------------------------------------------------ experiments

RunLog run_train_history(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingData data = load_training_data(cfg);
  const Mlp arch = Mlp::uniform_init(cfg.model.layer_dims, cfg.model.activation,
                                     stream_seed(cfg.seed, RandomStream::init));
  const std::size_t per_epoch = data.train.size() / cfg.batch_size;

  RunLog log;
  log.runs.resize(cfg.optimizers.size());
  parallel_for(cfg.optimizers.size(), cfg.threads, [&](std::size_t i) {
    TrainOptions o = train_options(cfg, cfg.optimizers[i].kind);
    o.eval_stride = per_epoch;
    log.runs[i] = train_run(arch, arch.params(), cfg.optimizers[i], data, o);
  });

  const fs::path out = cfg.output_dir;
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const auto& run : log.runs) {
    write_run_files(out / to_string(run.config.kind), run);
    summary.push_back(run_json(run));
  }
  log.metadata["experiment"] = to_string(cfg.experiment);
  log.metadata["model"] = model_meta(cfg);
  log.metadata["steps_per_epoch"] = per_epoch;
  log.metadata["runs"] = summary;
  write_text(out / "summary.json", log.metadata.dump(2) + "\n");
  write_text(out / "history.svg",
             render_line_charts_svg(history_panels(log.runs), "training history"));

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_meta(cfg, out, {}, secs);
  log.metadata["wall_time_seconds"] = secs;
  return log;
}

RaceResult run_shared_landscape_race(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingData data = load_training_data(cfg);
  const LossKind kind = cfg.model.loss;
  const Mlp arch = Mlp::uniform_init(cfg.model.layer_dims, cfg.model.activation,
                                     stream_seed(cfg.seed, RandomStream::init));
  const auto& ls = cfg.landscape;

  RaceResult res;
  res.anchor = arch.params();
  res.pair = random_directions(
      res.anchor, ls.direction_mode,
      ls.direction_seed.value_or(stream_seed(cfg.seed, RandomStream::directions)));
  const RaggedTensor start =
      slice_params(res.anchor, res.pair, ls.start_alpha, ls.start_beta);

  const std::size_t n = cfg.optimizers.size();
  res.log.runs.resize(n);
  res.trajectories.resize(n);
  res.summary.resize(n);
  const LossFunction train_fn = [&](const RaggedTensor& w) {
    return arch.loss_at(w, data.train_batch, kind);
  };

  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const OptimizerConfig& oc = cfg.optimizers[i];
    TrainOptions o = train_options(cfg, oc.kind);
    o.snapshot_stride = cfg.sample_stride;
    o.eval_stride = cfg.sample_stride;
    OptimizerRun run = train_run(arch, start, oc, data, o);

    const auto coords = project_trajectory(run.snapshots, res.anchor, res.pair);
    res.trajectories[i] = make_trajectory(to_string(oc.kind), cfg.sample_stride,
                                          run.snapshot_steps, coords,
                                          run.snapshots, arch, data, kind);
    const auto end = project_trajectory({run.final_params}, res.anchor, res.pair);

    RaceSummary& s = res.summary[i];
    s.optimizer = to_string(oc.kind);
    s.iterations = run.steps.size();
    const auto& f = run.final_evaluation();
    s.final_train_loss = f.train_loss;
    s.final_test_loss = f.test_loss;
    s.final_train_accuracy = f.train_accuracy;
    s.final_test_accuracy = f.test_accuracy;
    s.final_decile_max_grad_norm = final_decile_max_grad_norm(run.steps);
    for (const auto& r : run.steps) {
      if (r.flagged()) ++s.flagged_steps;
      if (r.d_t) s.max_d_t = std::max(s.max_d_t.value_or(0.0), *r.d_t);
    }
    s.end_alpha = end[0].alpha;
    s.end_beta = end[0].beta;
    s.flatness_variance = local_loss_variance(run.final_params, res.pair, 0.0, 0.0,
                                              ls.flatness_radius, train_fn);
    s.adagrad_step_ratio = adagrad_step_ratio(run);
    res.log.runs[i] = std::move(run);
  });

  std::vector<double> alphas, betas;
  if (ls.auto_axes) {
    double amin = ls.start_alpha, amax = ls.start_alpha;
    double bmin = ls.start_beta, bmax = ls.start_beta;
    auto cover = [&](double a, double b) {
      amin = std::min(amin, a);
      amax = std::max(amax, a);
      bmin = std::min(bmin, b);
      bmax = std::max(bmax, b);
    };
    for (const auto& t : res.trajectories)
      for (const auto& p : t.coords) cover(p.alpha, p.beta);
    for (const auto& s : res.summary) cover(s.end_alpha, s.end_beta);
    alphas = auto_axis(amin, amax, ls.resolution);
    betas = auto_axis(bmin, bmax, ls.resolution);
  } else {
    alphas = linspace(ls.alpha_min, ls.alpha_max, ls.resolution);
    betas = linspace(ls.beta_min, ls.beta_max, ls.resolution);
  }
  res.grid = evaluate_grid(res.anchor, res.pair, alphas, betas, arch,
                           data.train_batch, &data.test_batch, kind,
                           {ls.clip_ceiling, cfg.threads});
  res.grid.anchor_meta["source"] = "init";
  res.grid.anchor_meta["model"] = model_meta(cfg);
  res.grid.anchor_meta["start"] = {ls.start_alpha, ls.start_beta};

  const fs::path out = cfg.output_dir;
  write_grid_csv(out / "grid.csv", res.grid);
  write_text(out / "grid.json", grid_to_json(res.grid).dump() + "\n");
  write_text(out / "landscape.svg",
             render_landscape_svg(res.grid, res.trajectories, "shared landscape race"));
  write_text(out / "history.svg",
             render_line_charts_svg(history_panels(res.log.runs), "race history"));

  std::string csv =
      "optimizer,iterations,final_train_loss,final_test_loss,final_train_accuracy,"
      "final_test_accuracy,final_decile_max_grad_norm,max_d_t,flagged_steps,"
      "end_alpha,end_beta,flatness_variance,adagrad_step_ratio\n";
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = res.summary[i];
    csv += s.optimizer + ',' + std::to_string(s.iterations) + ',' +
           format_double(s.final_train_loss) + ',' + format_double(s.final_test_loss) +
           ',' + format_double(s.final_train_accuracy) + ',' +
           format_double(s.final_test_accuracy) + ',' +
           format_double(s.final_decile_max_grad_norm) + ',' + opt_field(s.max_d_t) +
           ',' + std::to_string(s.flagged_steps) + ',' + format_double(s.end_alpha) +
           ',' + format_double(s.end_beta) + ',' + format_double(s.flatness_variance) +
           ',' + opt_field(s.adagrad_step_ratio) + '\n';
    const fs::path dir = out / s.optimizer;
    write_run_files(dir, res.log.runs[i]);
    write_trajectory_csv(dir / "trajectory.csv", res.trajectories[i]);
    auto j = run_json(res.log.runs[i]);
    j["end"] = {s.end_alpha, s.end_beta};
    j["flatness_variance"] = s.flatness_variance;
    if (s.adagrad_step_ratio) j["adagrad_step_ratio"] = *s.adagrad_step_ratio;
    j["samples"] = res.trajectories[i].coords.size();
    runs.push_back(j);
  }
  write_text(out / "summary.csv", csv);
  res.log.metadata["experiment"] = to_string(cfg.experiment);
  res.log.metadata["model"] = model_meta(cfg);
  res.log.metadata["direction_mode"] = to_string(res.pair.normalization);
  res.log.metadata["direction_seed"] = res.pair.seed;
  res.log.metadata["runs"] = runs;
  write_text(out / "summary.json", res.log.metadata.dump(2) + "\n");

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_meta(cfg, out, {}, secs);
  res.log.metadata["wall_time_seconds"] = secs;
  return res;
}

LandscapeResult run_landscape_3d(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingData data = load_training_data(cfg);
  const LossKind kind = cfg.model.loss;
  const Mlp arch = Mlp::uniform_init(cfg.model.layer_dims, cfg.model.activation,
                                     stream_seed(cfg.seed, RandomStream::init));
  const auto& ls = cfg.landscape;
  const fs::path out = cfg.output_dir;

  LandscapeResult res;
  res.anchor = arch.params();
  if (ls.anchor == AnchorSource::trained) {
    if (cfg.optimizers.empty()) throw ConfigError("trained anchor needs an optimizer");
    const OptimizerConfig& oc = cfg.optimizers.front();
    TrainOptions o = train_options(cfg, oc.kind);
    res.log.runs.push_back(train_run(arch, arch.params(), oc, data, o));
    res.anchor = res.log.runs.back().final_params;
    write_run_files(out / to_string(oc.kind), res.log.runs.back());
  }
  res.anchor_train_loss = arch.loss_at(res.anchor, data.train_batch, kind);
  res.pair = random_directions(
      res.anchor, ls.direction_mode,
      ls.direction_seed.value_or(stream_seed(cfg.seed, RandomStream::directions)));
  res.grid = evaluate_grid(res.anchor, res.pair,
                           linspace(ls.alpha_min, ls.alpha_max, ls.resolution),
                           linspace(ls.beta_min, ls.beta_max, ls.resolution), arch,
                           data.train_batch, &data.test_batch, kind,
                           {ls.clip_ceiling, cfg.threads});
  res.grid.anchor_meta["source"] =
      ls.anchor == AnchorSource::trained ? "trained" : "init";
  res.grid.anchor_meta["model"] = model_meta(cfg);
  res.grid.anchor_meta["anchor_train_loss"] = res.anchor_train_loss;

  write_grid_csv(out / "grid.csv", res.grid);
  write_text(out / "grid.json", grid_to_json(res.grid).dump() + "\n");
  write_text(out / "landscape.svg", render_landscape_svg(res.grid, {}, "loss landscape"));

  res.log.metadata["experiment"] = to_string(cfg.experiment);
  res.log.metadata["model"] = model_meta(cfg);
  res.log.metadata["anchor_train_loss"] = res.anchor_train_loss;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& run : res.log.runs) runs.push_back(run_json(run));
  res.log.metadata["runs"] = runs;
  write_text(out / "summary.json", res.log.metadata.dump(2) + "\n");

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_meta(cfg, out, {}, secs);
  res.log.metadata["wall_time_seconds"] = secs;
  return res;
}

TrajectoryResult run_trajectory_2d(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const TrainingData data = load_training_data(cfg);
  const LossKind kind = cfg.model.loss;
  const Mlp arch = Mlp::uniform_init(cfg.model.layer_dims, cfg.model.activation,
                                     stream_seed(cfg.seed, RandomStream::init));
  const auto& ls = cfg.landscape;
  const fs::path out = cfg.output_dir;
  const std::size_t n = cfg.optimizers.size();

  TrajectoryResult res;
  res.log.runs.resize(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    TrainOptions o = train_options(cfg, cfg.optimizers[i].kind);
    o.snapshot_stride = cfg.sample_stride;
    o.eval_stride = cfg.sample_stride;
    OptimizerRun run = train_run(arch, arch.params(), cfg.optimizers[i], data, o);
    run.snapshots.push_back(run.final_params);
    run.snapshot_steps.push_back(run.steps.size());
    res.log.runs[i] = std::move(run);
  });

  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const OptimizerRun& run = res.log.runs[i];
    const std::string name = to_string(run.config.kind);
    if (run.snapshots.size() < 3)
      throw MissingArtifact(name + ": trajectory needs at least 3 snapshots, have " +
                            std::to_string(run.snapshots.size()));
    const RaggedTensor& anchor = run.final_params;
    DirectionPair pair;
    auto j = run_json(run);
    if (ls.direction_mode == DirectionMode::pca) {
      const PcaResult pca = pca_directions_detailed(run.snapshots, anchor);
      pair = pca.pair;
      j["eigenvalues"] = {pca.eigenvalue1, pca.eigenvalue2};
      j["pca_iterations"] = pca.iterations;
    } else {
      pair = random_directions(
          anchor, ls.direction_mode,
          ls.direction_seed.value_or(stream_seed(cfg.seed, RandomStream::directions)));
    }
    const auto coords = project_trajectory(run.snapshots, anchor, pair);
    Trajectory traj = make_trajectory(name, cfg.sample_stride, run.snapshot_steps,
                                      coords, run.snapshots, arch, data, kind);
    std::vector<double> alphas, betas;
    if (ls.auto_axes) {
      double amin = 0, amax = 0, bmin = 0, bmax = 0;
      for (const auto& p : traj.coords) {
        amin = std::min(amin, p.alpha);
        amax = std::max(amax, p.alpha);
        bmin = std::min(bmin, p.beta);
        bmax = std::max(bmax, p.beta);
      }
      alphas = auto_axis(amin, amax, ls.resolution);
      betas = auto_axis(bmin, bmax, ls.resolution);
    } else {
      alphas = linspace(ls.alpha_min, ls.alpha_max, ls.resolution);
      betas = linspace(ls.beta_min, ls.beta_max, ls.resolution);
    }
    LandscapeGrid grid = evaluate_grid(anchor, pair, alphas, betas, arch,
                                       data.train_batch, &data.test_batch, kind,
                                       {ls.clip_ceiling, cfg.threads});
    grid.anchor_meta["source"] = "trained";
    grid.anchor_meta["optimizer"] = name;
    grid.anchor_meta["model"] = model_meta(cfg);
    grid.anchor_meta["direction_mode"] = to_string(pair.normalization);

    const fs::path dir = out / name;
    write_run_files(dir, run);
    write_trajectory_csv(dir / "trajectory.csv", traj);
    write_grid_csv(dir / "grid.csv", grid);
    write_text(dir / "grid.json", grid_to_json(grid).dump() + "\n");
    write_text(dir / "trajectory.svg",
               render_landscape_svg(grid, {traj}, name + " trajectory"));
    j["samples"] = traj.coords.size();
    runs.push_back(j);
    res.grids.push_back(std::move(grid));
    res.trajectories.push_back(std::move(traj));
    res.pairs.push_back(std::move(pair));
  }
  res.log.metadata["experiment"] = to_string(cfg.experiment);
  res.log.metadata["model"] = model_meta(cfg);
  res.log.metadata["runs"] = runs;
  write_text(out / "summary.json", res.log.metadata.dump(2) + "\n");

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_meta(cfg, out, {}, secs);
  res.log.metadata["wall_time_seconds"] = secs;
  return res;
}

fs::path run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::train_history: run_train_history(cfg); break;
    case ExperimentKind::landscape_3d: run_landscape_3d(cfg); break;
    case ExperimentKind::trajectory_2d: run_trajectory_2d(cfg); break;
    case ExperimentKind::shared_landscape_race: run_shared_landscape_race(cfg); break;
  }
  return cfg.output_dir;
}

}  // namespace pugd
