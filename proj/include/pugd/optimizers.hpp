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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pugd/models.hpp"
#include "pugd/ragged_tensor.hpp"

namespace pugd {

enum class OptimizerKind { sgd, adagrad, ngd_fm, ngd_cw, ugd, pugd, sam, asam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer_kind(const std::string& s);
const std::vector<OptimizerKind>& all_optimizer_kinds();

/// Kinds that evaluate a second gradient at a perturbed point.
bool is_perturbed(OptimizerKind k);
/// Kinds whose applied update always has dual-norm equal to the learning rate.
bool is_unit_step(OptimizerKind k);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double lr_max = 0.1;
  double weight_decay = 5e-4;
  /// Used by sgd, sam and asam only.
  double momentum = 0.9;
  bool nesterov = false;
  /// Perturbation radius; unset means 0.05 for sam and 0.5 for asam.
  std::optional<double> rho;
  /// Adagrad denominator stabilizer.
  double eps = 1e-10;

  double effective_rho() const;
  /// Throws ConfigError unless lr_max in (0, 1], rho > 0, eps > 0.
  void validate() const;
};

struct OptimizerState {
  std::optional<RaggedTensor> momentum_buf;
  std::optional<RaggedTensor> adagrad_accum;
  std::optional<RaggedTensor> prev_unit_grad;
  std::size_t step_count = 0;
};

enum StepFlag : std::uint32_t {
  kZeroNormUpdate = 1u << 0,       // normalized update skipped, params unchanged
  kPerturbationSkipped = 1u << 1,  // pugd perturbation direction vanished
  kSharpnessFallback = 1u << 2,    // sam/asam fell back to a plain sgd step
};

std::string flags_to_string(std::uint32_t flags);

struct StepRecord {
  std::size_t step_index = 0;
  double lr_used = 0.0;
  double loss_before = 0.0;
  /// Dual-norm of the raw loss gradient (weight decay excluded).
  double grad_dual_norm = 0.0;
  /// Measured dual-norm of w_t - w_{t+1}.
  double update_dual_norm = 0.0;
  std::optional<double> d_t;
  /// Dual-norm of the perturbation actually applied (sam, asam, pugd).
  std::optional<double> perturb_norm;
  /// Dual-norm of the normalized descent direction (ugd, ngd_fm, pugd).
  std::optional<double> direction_norm;
  std::uint32_t flags = 0;

  bool flagged() const { return flags != 0; }
};

/// Loss and gradient at the given parameters, always on the same batch for
/// the duration of one step. Must be callable more than once per step.
using GradientOracle = std::function<LossGrad(const RaggedTensor&)>;

StepRecord sgd_step(RaggedTensor& params, const GradientOracle& oracle,
                    double lr, const OptimizerConfig& cfg, OptimizerState& state);
StepRecord adagrad_step(RaggedTensor& params, const GradientOracle& oracle,
                        double lr, const OptimizerConfig& cfg,
                        OptimizerState& state);
StepRecord ngd_fm_step(RaggedTensor& params, const GradientOracle& oracle,
                       double lr, const OptimizerConfig& cfg,
                       OptimizerState& state);
StepRecord ngd_cw_step(RaggedTensor& params, const GradientOracle& oracle,
                       double lr, const OptimizerConfig& cfg,
                       OptimizerState& state);
StepRecord ugd_step(RaggedTensor& params, const GradientOracle& oracle,
                    double lr, const OptimizerConfig& cfg, OptimizerState& state);
StepRecord pugd_step(RaggedTensor& params, const GradientOracle& oracle,
                     double lr, const OptimizerConfig& cfg, OptimizerState& state);
StepRecord sam_step(RaggedTensor& params, const GradientOracle& oracle,
                    double lr, const OptimizerConfig& cfg, OptimizerState& state);
StepRecord asam_step(RaggedTensor& params, const GradientOracle& oracle,
                     double lr, const OptimizerConfig& cfg,
                     OptimizerState& state);

/// Dispatches on cfg.kind.
StepRecord optimizer_step(RaggedTensor& params, const GradientOracle& oracle,
                          double lr, const OptimizerConfig& cfg,
                          OptimizerState& state);

/// Upper bound on the distance between two unit tensors.
inline constexpr double kBoundedDifferenceLimit = 2.0;

/// d_t = ||prev_unit - curr_unit||. The value is cross-checked against the
/// inner-product form 2 - 2<prev, curr> (compared as squared distances,
/// absolute tolerance 1e-9); a disagreement throws std::logic_error.
/// Throws NotUnit when either input's dual-norm is off 1 by more than 1e-6.
double check_bounded_difference(const RaggedTensor& prev_unit,
                                const RaggedTensor& curr_unit);

/// Per-element lr / (sqrt(accum) + eps) for the current Adagrad state.
RaggedTensor adagrad_effective_step(const OptimizerState& state, double lr,
                                    double eps);

}  // namespace pugd
