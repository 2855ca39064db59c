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

#include "pugd/optimizers.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace pugd {

namespace {

struct KindName {
  OptimizerKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {OptimizerKind::sgd, "sgd"},       {OptimizerKind::adagrad, "adagrad"},
    {OptimizerKind::ngd_fm, "ngd_fm"}, {OptimizerKind::ngd_cw, "ngd_cw"},
    {OptimizerKind::ugd, "ugd"},       {OptimizerKind::pugd, "pugd"},
    {OptimizerKind::sam, "sam"},       {OptimizerKind::asam, "asam"},
};

/// g + weight_decay * w (coupled decay). Returns g untouched when decay is 0.
RaggedTensor with_weight_decay(const RaggedTensor& g, const RaggedTensor& w,
                               double weight_decay) {
  if (weight_decay == 0.0) return g;
  RaggedTensor out = g;
  axpy(weight_decay, w, out);
  return out;
}

StepRecord begin_record(const OptimizerState& state, double lr,
                        const LossGrad& lg) {
  StepRecord rec;
  rec.step_index = state.step_count;
  rec.lr_used = lr;
  rec.loss_before = lg.loss;
  rec.grad_dual_norm = dual_norm(lg.grad);
  return rec;
}

void log_difference(const RaggedTensor& direction, OptimizerState& state,
                    StepRecord& rec) {
  if (state.prev_unit_grad) {
    rec.d_t = check_bounded_difference(*state.prev_unit_grad, direction);
  }
  state.prev_unit_grad = direction;
}

/// params <- params - lr * direction, where direction already has unit
/// dual-norm. Logs d_t against the previous direction.
void apply_unit_direction(RaggedTensor& params, const RaggedTensor& direction,
                          double lr, OptimizerState& state, StepRecord& rec) {
  rec.direction_norm = dual_norm(direction);
  log_difference(direction, state, rec);
  const RaggedTensor before = params;
  axpy(-lr, direction, params);
  rec.update_dual_norm = difference_norm(before, params);
}

/// Zero-norm fallback shared by the normalized kinds: no movement, flagged.
void skip_update(StepRecord& rec) {
  rec.flags |= kZeroNormUpdate;
  rec.update_dual_norm = 0.0;
}

void unit_gradient_update(RaggedTensor& params, const RaggedTensor& g,
                          double lr, OptimizerState& state, StepRecord& rec) {
  RaggedTensor direction;
  try {
    direction = unit(g);
  } catch (const ZeroNorm&) {
    skip_update(rec);
    return;
  }
  apply_unit_direction(params, direction, lr, state, rec);
}

/// SGD with optional (Nesterov) momentum on an already-decayed gradient.
void momentum_update(RaggedTensor& params, const RaggedTensor& g, double lr,
                     const OptimizerConfig& cfg, OptimizerState& state,
                     StepRecord& rec) {
  RaggedTensor update = g;
  if (cfg.momentum != 0.0) {
    if (!state.momentum_buf) {
      state.momentum_buf = g;
    } else {
      RaggedTensor& buf = *state.momentum_buf;
      buf = scale(buf, cfg.momentum);
      axpy(1.0, g, buf);
    }
    if (cfg.nesterov) {
      axpy(cfg.momentum, *state.momentum_buf, update);
    } else {
      update = *state.momentum_buf;
    }
  }
  const RaggedTensor before = params;
  axpy(-lr, update, params);
  rec.update_dual_norm = difference_norm(before, params);
}

/// Shared tail of sam/asam: evaluate at w + perturbation on the same batch,
/// restore w from a saved copy, then take a momentum-SGD step on g*.
StepRecord sharpness_step(RaggedTensor& params, const GradientOracle& oracle,
                          double lr, const OptimizerConfig& cfg,
                          OptimizerState& state, const LossGrad& lg,
                          StepRecord rec,
                          const std::optional<RaggedTensor>& perturbation) {
  RaggedTensor second_grad;
  if (!perturbation) {
    rec.flags |= kSharpnessFallback;
    second_grad = lg.grad;
  } else {
    rec.perturb_norm = dual_norm(*perturbation);
    const RaggedTensor saved = params;
    axpy(1.0, *perturbation, params);
    second_grad = oracle(params).grad;
    params = saved;
  }
  momentum_update(params, with_weight_decay(second_grad, params, cfg.weight_decay),
                  lr, cfg, state, rec);
  ++state.step_count;
  return rec;
}

}  // namespace

std::string to_string(OptimizerKind k) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == k) return kn.name;
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(const std::string& s) {
  for (const auto& kn : kKindNames) {
    if (s == kn.name) return kn.kind;
  }
  throw ConfigError("unknown optimizer '" + s + "'");
}

const std::vector<OptimizerKind>& all_optimizer_kinds() {
  static const std::vector<OptimizerKind> kinds = [] {
    std::vector<OptimizerKind> v;
    for (const auto& kn : kKindNames) v.push_back(kn.kind);
    return v;
  }();
  return kinds;
}

bool is_perturbed(OptimizerKind k) {
  return k == OptimizerKind::sam || k == OptimizerKind::asam ||
         k == OptimizerKind::pugd;
}

bool is_unit_step(OptimizerKind k) {
  return k == OptimizerKind::ugd || k == OptimizerKind::ngd_fm ||
         k == OptimizerKind::pugd;
}

double OptimizerConfig::effective_rho() const {
  if (rho) return *rho;
  return kind == OptimizerKind::asam ? 0.5 : 0.05;
}

void OptimizerConfig::validate() const {
  if (!(lr_max > 0.0 && lr_max <= 1.0)) {
    throw ConfigError("lr_max must lie in (0, 1], got " + std::to_string(lr_max));
  }
  if (!(effective_rho() > 0.0)) throw ConfigError("rho must be positive");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
}

std::string flags_to_string(std::uint32_t flags) {
  std::string out;
  auto append = [&out](const char* s) {
    if (!out.empty()) out += '|';
    out += s;
  };
  if (flags & kZeroNormUpdate) append("zero_norm_update");
  if (flags & kPerturbationSkipped) append("perturbation_skipped");
  if (flags & kSharpnessFallback) append("sharpness_fallback");
  return out;
}

StepRecord sgd_step(RaggedTensor& params, const GradientOracle& oracle,
                    double lr, const OptimizerConfig& cfg,
                    OptimizerState& state) {
  const LossGrad lg = oracle(params);
  StepRecord rec = begin_record(state, lr, lg);
  momentum_update(params, with_weight_decay(lg.grad, params, cfg.weight_decay),
                  lr, cfg, state, rec);
  ++state.step_count;
  return rec;
}

StepRecord adagrad_step(RaggedTensor& params, const GradientOracle& oracle,
                        double lr, const OptimizerConfig& cfg,
                        OptimizerState& state) {
  const LossGrad lg = oracle(params);
  StepRecord rec = begin_record(state, lr, lg);
  const RaggedTensor g = with_weight_decay(lg.grad, params, cfg.weight_decay);
  if (!state.adagrad_accum) state.adagrad_accum = g.zeros_like();
  RaggedTensor& accum = *state.adagrad_accum;
  require_congruent(accum, params, "adagrad accumulator");

  const RaggedTensor before = params;
  for (std::size_t c = 0; c < params.num_components(); ++c) {
    auto w = params.values(c);
    auto a = accum.values(c);
    auto gc = g.values(c);
    for (std::size_t k = 0; k < w.size(); ++k) {
      a[k] += gc[k] * gc[k];
      w[k] -= lr * gc[k] / (std::sqrt(a[k]) + cfg.eps);
    }
  }
  rec.update_dual_norm = difference_norm(before, params);
  ++state.step_count;
  return rec;
}

StepRecord ngd_fm_step(RaggedTensor& params, const GradientOracle& oracle,
                       double lr, const OptimizerConfig& cfg,
                       OptimizerState& state) {
  const LossGrad lg = oracle(params);
  StepRecord rec = begin_record(state, lr, lg);
  const RaggedTensor g = with_weight_decay(lg.grad, params, cfg.weight_decay);

  // Full-magnitude normalization on the flattened gradient vector.
  std::vector<double> flat = g.flatten();
  double sq = 0.0;
  for (double v : flat) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > kZeroNormGuard)) {
    skip_update(rec);
  } else {
    for (double& v : flat) v /= norm;
    RaggedTensor direction = g;
    direction.assign_flat(flat);
    apply_unit_direction(params, direction, lr, state, rec);
  }
  ++state.step_count;
  return rec;
}

StepRecord ngd_cw_step(RaggedTensor& params, const GradientOracle& oracle,
                       double lr, const OptimizerConfig& cfg,
                       OptimizerState& state) {
  const LossGrad lg = oracle(params);
  StepRecord rec = begin_record(state, lr, lg);
  RaggedTensor direction = with_weight_decay(lg.grad, params, cfg.weight_decay);
  const std::vector<double> norms = component_norms(direction);
  for (std::size_t c = 0; c < direction.num_components(); ++c) {
    auto values = direction.values(c);
    if (norms[c] > kZeroNormGuard) {
      for (double& v : values) v /= norms[c];
    } else {
      std::fill(values.begin(), values.end(), 0.0);
    }
  }
  const RaggedTensor before = params;
  axpy(-lr, direction, params);
  rec.update_dual_norm = difference_norm(before, params);
  ++state.step_count;
  return rec;
}

StepRecord ugd_step(RaggedTensor& params, const GradientOracle& oracle,
                    double lr, const OptimizerConfig& cfg,
                    OptimizerState& state) {
  const LossGrad lg = oracle(params);
  StepRecord rec = begin_record(state, lr, lg);
  unit_gradient_update(params, with_weight_decay(lg.grad, params, cfg.weight_decay),
                       lr, state, rec);
  ++state.step_count;
  return rec;
}

StepRecord pugd_step(RaggedTensor& params, const GradientOracle& oracle,
                     double lr, const OptimizerConfig& cfg,
                     OptimizerState& state) {
  // 1. clean gradient on the batch, with coupled decay
  const LossGrad lg = oracle(params);
  StepRecord rec = begin_record(state, lr, lg);
  const RaggedTensor saved = params;
  const RaggedTensor g = with_weight_decay(lg.grad, saved, cfg.weight_decay);

  // 2-4. unit perturbation |w| * g / || |w| * g ||, second gradient on the
  // same batch, restore w from the saved copy
  RaggedTensor perturbed_grad;
  RaggedTensor perturbation;
  bool have_perturbation = true;
  try {
    perturbation = unit(mul(abs(params), g));
  } catch (const ZeroNorm&) {
    have_perturbation = false;
  }
  if (have_perturbation) {
    rec.perturb_norm = dual_norm(perturbation);
    axpy(1.0, perturbation, params);
    perturbed_grad = with_weight_decay(oracle(params).grad, saved, cfg.weight_decay);
    params = saved;
  } else {
    rec.flags |= kPerturbationSkipped;
    rec.perturb_norm = 0.0;
    perturbed_grad = g;
  }

  // 5. descend along the unit tensor of g* + g
  axpy(1.0, g, perturbed_grad);
  unit_gradient_update(params, perturbed_grad, lr, state, rec);
  ++state.step_count;
  return rec;
}

StepRecord sam_step(RaggedTensor& params, const GradientOracle& oracle,
                    double lr, const OptimizerConfig& cfg,
                    OptimizerState& state) {
  const LossGrad lg = oracle(params);
  StepRecord rec = begin_record(state, lr, lg);
  std::optional<RaggedTensor> perturbation;
  try {
    perturbation = scale(
        unit(with_weight_decay(lg.grad, params, cfg.weight_decay)), cfg.effective_rho());
  } catch (const ZeroNorm&) {
    // no perturbation: sharpness_step falls back to plain sgd
  }
  return sharpness_step(params, oracle, lr, cfg, state, lg, rec, perturbation);
}

StepRecord asam_step(RaggedTensor& params, const GradientOracle& oracle,
                     double lr, const OptimizerConfig& cfg,
                     OptimizerState& state) {
  const LossGrad lg = oracle(params);
  StepRecord rec = begin_record(state, lr, lg);
  // T_w = |w|: eps = rho * T_w^2 g / ||T_w g||
  const RaggedTensor scaling = abs(params);
  const RaggedTensor scaled_grad =
      mul(scaling, with_weight_decay(lg.grad, params, cfg.weight_decay));
  const double norm = dual_norm(scaled_grad);
  std::optional<RaggedTensor> perturbation;
  if (norm > kZeroNormGuard) {
    perturbation = scale(mul(scaling, scaled_grad), cfg.effective_rho() / norm);
  }
  return sharpness_step(params, oracle, lr, cfg, state, lg, rec, perturbation);
}

StepRecord optimizer_step(RaggedTensor& params, const GradientOracle& oracle,
                          double lr, const OptimizerConfig& cfg,
                          OptimizerState& state) {
  switch (cfg.kind) {
    case OptimizerKind::sgd: return sgd_step(params, oracle, lr, cfg, state);
    case OptimizerKind::adagrad: return adagrad_step(params, oracle, lr, cfg, state);
    case OptimizerKind::ngd_fm: return ngd_fm_step(params, oracle, lr, cfg, state);
    case OptimizerKind::ngd_cw: return ngd_cw_step(params, oracle, lr, cfg, state);
    case OptimizerKind::ugd: return ugd_step(params, oracle, lr, cfg, state);
    case OptimizerKind::pugd: return pugd_step(params, oracle, lr, cfg, state);
    case OptimizerKind::sam: return sam_step(params, oracle, lr, cfg, state);
    case OptimizerKind::asam: return asam_step(params, oracle, lr, cfg, state);
  }
  throw std::logic_error("unhandled optimizer kind");
}

double check_bounded_difference(const RaggedTensor& prev_unit,
                                const RaggedTensor& curr_unit) {
  require_congruent(prev_unit, curr_unit, "check_bounded_difference");
  constexpr double kUnitTolerance = 1e-6;
  const double prev_norm = dual_norm(prev_unit);
  const double curr_norm = dual_norm(curr_unit);
  if (std::fabs(prev_norm - 1.0) > kUnitTolerance ||
      std::fabs(curr_norm - 1.0) > kUnitTolerance) {
    throw NotUnit("bounded-difference inputs must be unit tensors (norms " +
                  std::to_string(prev_norm) + ", " + std::to_string(curr_norm) +
                  ")");
  }
  const double direct = difference_norm(prev_unit, curr_unit);
  // ||u - v||^2 = ||u||^2 + ||v||^2 - 2<u, v>, which is 2(1 - <u, v>) for
  // exact units. The squared forms are compared: near d = 0 the square root
  // amplifies the rounding of the subtraction.
  const double via_inner = prev_norm * prev_norm + curr_norm * curr_norm -
                           2.0 * inner(prev_unit, curr_unit);
  if (std::fabs(direct * direct - via_inner) > 1e-9) {
    throw std::logic_error("bounded-difference forms disagree: " +
                           std::to_string(direct * direct) + " vs " +
                           std::to_string(via_inner));
  }
  return direct;
}

RaggedTensor adagrad_effective_step(const OptimizerState& state, double lr,
                                    double eps) {
  if (!state.adagrad_accum) {
    throw MissingArtifact("optimizer state has no Adagrad accumulator");
  }
  RaggedTensor out = *state.adagrad_accum;
  for (std::size_t c = 0; c < out.num_components(); ++c) {
    for (double& v : out.values(c)) v = lr / (std::sqrt(v) + eps);
  }
  return out;
}

}  // namespace pugd
