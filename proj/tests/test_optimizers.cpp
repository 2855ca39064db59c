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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pugd/errors.hpp"
#include "pugd/optimizers.hpp"
#include "pugd/schedules.hpp"
#include "test_support.hpp"

using namespace pugd;
using pugd::testing::flat_l2;
using pugd::testing::random_batch;
using pugd::testing::tensor;

namespace {

OptimizerConfig plain(OptimizerKind kind) {
  OptimizerConfig c;
  c.kind = kind;
  c.weight_decay = 0.0;
  c.momentum = 0.0;
  return c;
}

// L = |w|^2 / 2, so g = w.
LossGrad bowl(const RaggedTensor& w) { return {0.5 * inner(w, w), w}; }

GradientOracle constant_grad(RaggedTensor g) {
  return [g](const RaggedTensor&) { return LossGrad{0.0, g}; };
}

double scalar(const RaggedTensor& t) { return t.values(0)[0]; }

struct MlpProblem {
  Mlp model = Mlp::uniform_init({6, 5, 3}, Activation::tanh, 21);
  Batch batch;
  MlpProblem() {
    std::mt19937_64 rng(21);
    batch = random_batch(rng, 8, 6, 3, true);
  }
  GradientOracle oracle() const {
    return [this](const RaggedTensor& w) {
      return model.loss_and_grad_at(w, batch, LossKind::mse);
    };
  }
};

}  // namespace

TEST(Sgd, QuadraticByHand) {
  RaggedTensor w = tensor({{2.0}});
  OptimizerState st;
  sgd_step(w, bowl, 0.1, plain(OptimizerKind::sgd), st);
  EXPECT_DOUBLE_EQ(scalar(w), 1.8);
}

TEST(Sgd, ZeroGradientLeavesParams) {
  RaggedTensor w = tensor({{2.0, -1.0}});
  OptimizerState st;
  const StepRecord r = sgd_step(w, constant_grad(tensor({{0.0, 0.0}})), 0.1,
                                plain(OptimizerKind::sgd), st);
  EXPECT_EQ(w, tensor({{2.0, -1.0}}));
  EXPECT_EQ(r.update_dual_norm, 0.0);
}

TEST(Sgd, MomentumUnrolled) {
  // buffer b1 = g, b2 = 0.9 b1 + g; displacement 0.1 (1 + 1.9)
  OptimizerConfig c = plain(OptimizerKind::sgd);
  c.momentum = 0.9;
  RaggedTensor w = tensor({{0.0}});
  OptimizerState st;
  const auto g = constant_grad(tensor({{1.0}}));
  sgd_step(w, g, 0.1, c, st);
  sgd_step(w, g, 0.1, c, st);
  EXPECT_NEAR(-scalar(w), 0.29, 1e-15);
}

TEST(Sgd, NesterovLooksAhead) {
  OptimizerConfig c = plain(OptimizerKind::sgd);
  c.momentum = 0.9;
  c.nesterov = true;
  RaggedTensor w = tensor({{0.0}});
  OptimizerState st;
  sgd_step(w, constant_grad(tensor({{1.0}})), 0.1, c, st);
  EXPECT_NEAR(-scalar(w), 0.19, 1e-15);
}

TEST(Sgd, CoupledWeightDecay) {
  OptimizerConfig c = plain(OptimizerKind::sgd);
  c.weight_decay = 0.5;
  RaggedTensor w = tensor({{2.0}});
  OptimizerState st;
  sgd_step(w, constant_grad(tensor({{1.0}})), 0.1, c, st);
  EXPECT_DOUBLE_EQ(scalar(w), 2.0 - 0.1 * (1.0 + 0.5 * 2.0));
}

TEST(Adagrad, FirstStepSelfNormalizes) {
  RaggedTensor w = tensor({{0.0}});
  OptimizerState st;
  const StepRecord r = adagrad_step(w, constant_grad(tensor({{3.0}})), 0.1,
                                    plain(OptimizerKind::adagrad), st);
  EXPECT_DOUBLE_EQ(r.update_dual_norm, 0.1 * 3.0 / (3.0 + 1e-10));
}

TEST(Adagrad, ConstantGradientClosedForm) {
  RaggedTensor w = tensor({{0.0}});
  OptimizerState st;
  const auto g = constant_grad(tensor({{1.0}}));
  for (int k = 1; k <= 50; ++k) {
    const StepRecord r = adagrad_step(w, g, 0.1, plain(OptimizerKind::adagrad), st);
    EXPECT_NEAR(r.update_dual_norm, 0.1 / (std::sqrt(static_cast<double>(k)) + 1e-10), 1e-15);
  }
}

TEST(Adagrad, ZeroGradientNoChange) {
  RaggedTensor w = tensor({{1.0, 2.0}});
  OptimizerState st;
  adagrad_step(w, constant_grad(tensor({{0.0, 0.0}})), 0.1, plain(OptimizerKind::adagrad), st);
  EXPECT_EQ(w, tensor({{1.0, 2.0}}));
}

TEST(Adagrad, EffectiveStepNonIncreasing) {
  MlpProblem p;
  RaggedTensor w = p.model.params();
  OptimizerState st;
  OptimizerConfig c;
  c.kind = OptimizerKind::adagrad;
  std::vector<double> prev;
  for (int t = 0; t < 40; ++t) {
    adagrad_step(w, p.oracle(), 0.1, c, st);
    const auto eff = adagrad_effective_step(st, 0.1, c.eps).flatten();
    if (!prev.empty()) {
      for (std::size_t i = 0; i < eff.size(); ++i) EXPECT_LE(eff[i], prev[i]);
    }
    prev = eff;
  }
}

TEST(NgdFm, Examples) {
  RaggedTensor w = tensor({{0.0, 0.0}});
  OptimizerState st;
  ngd_fm_step(w, constant_grad(tensor({{3.0, 4.0}})), 0.1, plain(OptimizerKind::ngd_fm), st);
  EXPECT_NEAR(-w.values(0)[0], 0.06, 1e-16);
  EXPECT_NEAR(-w.values(0)[1], 0.08, 1e-16);

  for (double g : {-7.0, 0.003}) {
    RaggedTensor v = tensor({{1.0}});
    OptimizerState s;
    ngd_fm_step(v, constant_grad(tensor({{g}})), 0.25, plain(OptimizerKind::ngd_fm), s);
    EXPECT_DOUBLE_EQ(scalar(v), 1.0 - 0.25 * (g > 0 ? 1.0 : -1.0));
  }
}

TEST(NgdFm, SameTrajectoryAsUgd) {
  MlpProblem p;
  RaggedTensor a = p.model.params(), b = p.model.params();
  OptimizerState sa, sb;
  OptimizerConfig ca, cb;
  ca.kind = OptimizerKind::ugd;
  cb.kind = OptimizerKind::ngd_fm;
  Schedule sched{ScheduleKind::cosine_annealing, 0.1, 0.0, 300};
  for (std::size_t t = 0; t < 300; ++t) {
    const StepRecord ra = optimizer_step(a, p.oracle(), lr_at(sched, t), ca, sa);
    const StepRecord rb = optimizer_step(b, p.oracle(), lr_at(sched, t), cb, sb);
    const auto fa = a.flatten(), fb = b.flatten();
    for (std::size_t i = 0; i < fa.size(); ++i) ASSERT_NEAR(fa[i], fb[i], 1e-12);
    EXPECT_EQ(ra.loss_before, rb.loss_before);
    EXPECT_EQ(ra.d_t, rb.d_t);
  }
}

TEST(NgdCw, PerComponentNormalization) {
  RaggedTensor w = tensor({{0.0, 0.0}, {0.0, 0.0}});
  OptimizerState st;
  ngd_cw_step(w, constant_grad(tensor({{3.0, 4.0}, {0.0, 5.0}})), 1.0,
              plain(OptimizerKind::ngd_cw), st);
  const auto f = w.flatten();
  // oracle: each component divided by its own L2 norm (5 and 5)
  const double expected[] = {-0.6, -0.8, 0.0, -1.0};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(f[i], expected[i], 1e-16);
}

TEST(NgdCw, SingleComponentMatchesFm) {
  RaggedTensor a = tensor({{1.0, -2.0, 0.5}}), b = a;
  OptimizerState sa, sb;
  const auto g = constant_grad(tensor({{0.3, -0.1, 2.0}}));
  ngd_cw_step(a, g, 0.1, plain(OptimizerKind::ngd_cw), sa);
  ngd_fm_step(b, g, 0.1, plain(OptimizerKind::ngd_fm), sb);
  EXPECT_EQ(a, b);
}

TEST(NgdCw, ZeroComponentUntouched) {
  RaggedTensor w = tensor({{1.0, 1.0}, {2.0}});
  OptimizerState st;
  const StepRecord r = ngd_cw_step(w, constant_grad(tensor({{0.0, 0.0}, {4.0}})), 0.5,
                                   plain(OptimizerKind::ngd_cw), st);
  EXPECT_EQ(w.component(0).values, (std::vector<double>{1.0, 1.0}));
  EXPECT_DOUBLE_EQ(w.values(1)[0], 1.5);
  EXPECT_FALSE(r.flagged());
}

TEST(Ugd, BowlRadialStep) {
  RaggedTensor w = tensor({{0.6, 0.8}});
  OptimizerState st;
  const StepRecord r = ugd_step(w, bowl, 0.1, plain(OptimizerKind::ugd), st);
  EXPECT_NEAR(flat_l2(w), 0.9, 1e-15);
  EXPECT_NEAR(r.update_dual_norm, 0.1, 1e-15);
  RaggedTensor v = tensor({{2.0}});
  OptimizerState s2;
  ugd_step(v, bowl, 0.5, plain(OptimizerKind::ugd), s2);
  EXPECT_DOUBLE_EQ(scalar(v), 1.5);
}

TEST(Ugd, IsotropicBowlStepCount) {
  RaggedTensor w = tensor({{3.0, 4.0}});
  OptimizerState st;
  int steps = 0;
  double prev = flat_l2(w);
  while (flat_l2(w) > 0.1 + 1e-9 && steps < 1000) {
    ugd_step(w, bowl, 0.1, plain(OptimizerKind::ugd), st);
    ++steps;
    const double now = flat_l2(w);
    if (prev > 0.1) {
      EXPECT_NEAR(prev - now, 0.1, 1e-12);
    }
    prev = now;
  }
  EXPECT_GE(steps, 49);
  EXPECT_LE(steps, 50);
}

TEST(Ugd, ZeroGradientFlaggedNotThrown) {
  RaggedTensor w = tensor({{1.0}});
  OptimizerState st;
  StepRecord r;
  ASSERT_NO_THROW(r = ugd_step(w, constant_grad(tensor({{0.0}})), 0.1,
                               plain(OptimizerKind::ugd), st));
  EXPECT_TRUE(r.flags & kZeroNormUpdate);
  EXPECT_EQ(scalar(w), 1.0);
}

TEST(Ugd, RunInvariants) {
  MlpProblem p;
  RaggedTensor w = p.model.params();
  OptimizerState st;
  OptimizerConfig c;
  c.kind = OptimizerKind::ugd;
  Schedule sched{ScheduleKind::cosine_annealing, 0.1, 0.0, 400};
  for (std::size_t t = 0; t < 400; ++t) {
    const RaggedTensor before = w;
    const StepRecord r = ugd_step(w, p.oracle(), lr_at(sched, t), c, st);
    ASSERT_FALSE(r.flagged());
    EXPECT_NEAR(flat_l2(sub(before, w)), lr_at(sched, t), 1e-9);
    if (t > 0) {
      ASSERT_TRUE(r.d_t.has_value());
      EXPECT_LE(*r.d_t, 2.0 + 1e-9);
    }
  }
}

TEST(Pugd, OneDimensionalByHand) {
  // g = 2, eps = |2|*2/4 = 1, w* = 3, g* = 3, U = (3 + 2) / 5 = 1, w' = 1.5
  std::vector<double> seen;
  const GradientOracle oracle = [&](const RaggedTensor& w) {
    seen.push_back(scalar(w));
    return bowl(w);
  };
  RaggedTensor w = tensor({{2.0}});
  OptimizerState st;
  const StepRecord r = pugd_step(w, oracle, 0.5, plain(OptimizerKind::pugd), st);
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(seen[0], 2.0);
  EXPECT_EQ(seen[1], 3.0);
  EXPECT_DOUBLE_EQ(scalar(w), 1.5);
  EXPECT_DOUBLE_EQ(*r.perturb_norm, 1.0);
  EXPECT_DOUBLE_EQ(r.update_dual_norm, 0.5);
}

TEST(Pugd, ZeroGradientSkipsPerturbation) {
  RaggedTensor w = tensor({{1.0, -1.0}});
  OptimizerState st;
  const StepRecord r = pugd_step(w, constant_grad(tensor({{0.0, 0.0}})), 0.1,
                                 plain(OptimizerKind::pugd), st);
  EXPECT_TRUE(r.flags & kPerturbationSkipped);
  EXPECT_TRUE(r.flags & kZeroNormUpdate);
  EXPECT_EQ(w, tensor({{1.0, -1.0}}));
}

TEST(Pugd, ZeroWeightsSkipPerturbationButStillStep) {
  // |w| * g vanishes while g does not: degenerates to a UGD step
  RaggedTensor w = tensor({{0.0, 0.0}});
  RaggedTensor u = w;
  OptimizerState st, su;
  const auto g = constant_grad(tensor({{3.0, 4.0}}));
  const StepRecord r = pugd_step(w, g, 0.1, plain(OptimizerKind::pugd), st);
  ugd_step(u, g, 0.1, plain(OptimizerKind::ugd), su);
  EXPECT_TRUE(r.flags & kPerturbationSkipped);
  EXPECT_FALSE(r.flags & kZeroNormUpdate);
  EXPECT_EQ(w, u);
}

TEST(Pugd, RestoresSavedCopyExactly) {
  MlpProblem p;
  const RaggedTensor start = p.model.params();
  RaggedTensor perturbed_point;
  int calls = 0;
  const GradientOracle oracle = [&](const RaggedTensor& w) {
    if (calls++ == 1) perturbed_point = w;
    return p.model.loss_and_grad_at(w, p.batch, LossKind::mse);
  };
  OptimizerConfig c;
  c.kind = OptimizerKind::pugd;
  RaggedTensor w = start;
  OptimizerState st;
  const StepRecord r = pugd_step(w, oracle, 0.1, c, st);

  // independent replay: eps from the decayed gradient, descent from start
  const LossGrad lg = p.model.loss_and_grad_at(start, p.batch, LossKind::mse);
  RaggedTensor g = lg.grad;
  axpy(c.weight_decay, start, g);
  const RaggedTensor eps = unit(mul(abs(start), g));
  EXPECT_EQ(perturbed_point, add(start, eps));
  RaggedTensor gs = p.model.loss_and_grad_at(add(start, eps), p.batch, LossKind::mse).grad;
  axpy(c.weight_decay, start, gs);
  RaggedTensor expected = start;
  axpy(-0.1, unit(add(gs, g)), expected);
  EXPECT_EQ(w, expected);
  EXPECT_NEAR(*r.perturb_norm, 1.0, 1e-9);
}

TEST(Pugd, RunInvariants) {
  MlpProblem p;
  RaggedTensor w = p.model.params();
  OptimizerState st;
  OptimizerConfig c;
  c.kind = OptimizerKind::pugd;
  Schedule sched{ScheduleKind::cosine_annealing, 0.1, 0.0, 400};
  for (std::size_t t = 0; t < 400; ++t) {
    const RaggedTensor before = w;
    const StepRecord r = pugd_step(w, p.oracle(), lr_at(sched, t), c, st);
    ASSERT_FALSE(r.flagged());
    EXPECT_NEAR(flat_l2(sub(before, w)), lr_at(sched, t), 1e-9);
    EXPECT_NEAR(*r.perturb_norm, 1.0, 1e-9);
    EXPECT_NEAR(*r.direction_norm, 1.0, 1e-9);
    if (r.d_t) {
      EXPECT_LE(*r.d_t, 2.0 + 1e-9);
    }
  }
}

TEST(Sam, OneDimensionalByHand) {
  OptimizerConfig c = plain(OptimizerKind::sam);
  c.rho = 0.05;
  RaggedTensor w = tensor({{2.0}});
  OptimizerState st;
  const StepRecord r = sam_step(w, bowl, 0.1, c, st);
  EXPECT_DOUBLE_EQ(*r.perturb_norm, 0.05);
  EXPECT_DOUBLE_EQ(scalar(w), 2.0 - 0.1 * 2.05);
  EXPECT_NEAR(scalar(w), 1.795, 1e-15);
}

TEST(Sam, ZeroRadiusIsSgd) {
  MlpProblem p;
  for (auto kind : {OptimizerKind::sam, OptimizerKind::asam}) {
    OptimizerConfig c;
    c.kind = kind;
    c.rho = 0.0;
    OptimizerConfig s;
    s.kind = OptimizerKind::sgd;
    RaggedTensor a = p.model.params(), b = a;
    OptimizerState sa, sb;
    for (int t = 0; t < 5; ++t) {
      optimizer_step(a, p.oracle(), 0.1, c, sa);
      optimizer_step(b, p.oracle(), 0.1, s, sb);
    }
    EXPECT_EQ(a, b);
  }
}

TEST(Sam, PerturbationHasRadiusRho) {
  MlpProblem p;
  OptimizerConfig c;
  c.kind = OptimizerKind::sam;
  RaggedTensor w = p.model.params();
  OptimizerState st;
  for (int t = 0; t < 30; ++t) {
    const StepRecord r = sam_step(w, p.oracle(), 0.1, c, st);
    EXPECT_NEAR(*r.perturb_norm, c.effective_rho(), 1e-9);
  }
}

TEST(Sam, ZeroGradientFallsBack) {
  RaggedTensor w = tensor({{1.0}});
  OptimizerState st;
  const StepRecord r = sam_step(w, constant_grad(tensor({{0.0}})), 0.1,
                                plain(OptimizerKind::sam), st);
  EXPECT_TRUE(r.flags & kSharpnessFallback);
  EXPECT_EQ(scalar(w), 1.0);
}

TEST(Asam, OneDimensionalByHand) {
  OptimizerConfig c = plain(OptimizerKind::asam);
  c.rho = 0.5;
  std::vector<double> seen;
  const GradientOracle oracle = [&](const RaggedTensor& w) {
    seen.push_back(scalar(w));
    return bowl(w);
  };
  RaggedTensor w = tensor({{2.0}});
  OptimizerState st;
  const StepRecord r = asam_step(w, oracle, 0.1, c, st);
  EXPECT_DOUBLE_EQ(*r.perturb_norm, 1.0);  // 0.5 * (4 * 2) / 4
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_DOUBLE_EQ(seen[1], 3.0);
  EXPECT_DOUBLE_EQ(scalar(w), 2.0 - 0.1 * 3.0);
}

TEST(Asam, EqualMagnitudesCollinearWithSam) {
  RaggedTensor base = tensor({{0.7, -0.7, 0.7}, {-0.7}});
  const RaggedTensor g = tensor({{0.3, -1.2, 0.4}, {2.0}});
  std::vector<RaggedTensor> points;
  for (auto kind : {OptimizerKind::sam, OptimizerKind::asam}) {
    const GradientOracle oracle = [&](const RaggedTensor& w) {
      points.push_back(w);
      return LossGrad{0.0, g};
    };
    RaggedTensor w = base;
    OptimizerState st;
    optimizer_step(w, oracle, 0.1, plain(kind), st);
  }
  ASSERT_EQ(points.size(), 4u);
  const RaggedTensor es = sub(points[1], base), ea = sub(points[3], base);
  const double cosang = inner(es, ea) / (flat_l2(es) * flat_l2(ea));
  EXPECT_NEAR(cosang, 1.0, 1e-12);
}

TEST(BoundedDifference, Examples) {
  EXPECT_DOUBLE_EQ(check_bounded_difference(tensor({{1, 0}}), tensor({{-1, 0}})), 2.0);
  EXPECT_DOUBLE_EQ(check_bounded_difference(tensor({{1, 0}}), tensor({{1, 0}})), 0.0);
  EXPECT_NEAR(check_bounded_difference(tensor({{1, 0}}), tensor({{0, 1}})), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(check_bounded_difference(tensor({{2, 0}}), tensor({{1, 0}})), NotUnit);
  EXPECT_THROW(check_bounded_difference(tensor({{1}}), tensor({{1, 0}})), ShapeMismatch);
}

TEST(BoundedDifference, AntipodalRandomTensorsAttainTwo) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const RaggedTensor u = unit(pugd::testing::random_tensor(rng));
    const double d = check_bounded_difference(u, scale(u, -1.0));
    EXPECT_GE(d, 2.0 - 1e-9);
    EXPECT_LE(d, 2.0 + 1e-9);
  }
}

TEST(Config, ValidationAndDefaults) {
  OptimizerConfig c;
  EXPECT_EQ(c.lr_max, 0.1);
  EXPECT_EQ(c.weight_decay, 5e-4);
  EXPECT_EQ(c.momentum, 0.9);
  EXPECT_FALSE(c.nesterov);
  c.kind = OptimizerKind::sam;
  EXPECT_EQ(c.effective_rho(), 0.05);
  c.kind = OptimizerKind::asam;
  EXPECT_EQ(c.effective_rho(), 0.5);
  EXPECT_NO_THROW(c.validate());
  c.lr_max = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.lr_max = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c.lr_max = 1.0;
  c.rho = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.rho = 0.1;
  c.eps = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, KindNamesRoundTrip) {
  for (auto k : all_optimizer_kinds()) EXPECT_EQ(parse_optimizer_kind(to_string(k)), k);
  EXPECT_EQ(all_optimizer_kinds().size(), 8u);
  EXPECT_THROW(parse_optimizer_kind("adam"), ConfigError);
  EXPECT_EQ(flags_to_string(kZeroNormUpdate | kPerturbationSkipped),
            "zero_norm_update|perturbation_skipped");
  EXPECT_EQ(flags_to_string(0), "");
}
