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
#include <cmath>
#include <random>

#include "pugd/errors.hpp"
#include "pugd/format.hpp"
#include "pugd/harness.hpp"

namespace pugd {

namespace {

RaggedTensor random_ragged(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ncomp(1, 6), dim(1, 7), rank(1, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> logscale(-3.0, 3.0);
  RaggedTensor t;
  const int k = ncomp(rng);
  for (int c = 0; c < k; ++c) {
    std::vector<std::size_t> shape(static_cast<std::size_t>(rank(rng)));
    std::size_t size = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(dim(rng));
      size *= d;
    }
    const double scale = std::pow(10.0, logscale(rng));
    std::vector<double> v(size);
    for (auto& x : v) x = scale * normal(rng);
    t.add_component("c" + std::to_string(c), shape, std::move(v));
  }
  return t;
}

Dataset synthetic_split(const std::string& name, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255), label(0, 9);
  Dataset d;
  d.name = name;
  d.rows = n;
  d.cols = 784;
  d.pixels.resize(n * 784);
  d.labels.resize(n);
  for (auto& p : d.pixels) p = static_cast<std::uint8_t>(byte(rng));
  for (auto& l : d.labels) l = static_cast<std::uint8_t>(label(rng));
  return d;
}

TrainingData check_data(const CheckOptions& opts) {
  if (!opts.data_root.empty() && std::filesystem::exists(opts.data_root)) {
    return make_training_data(subset(load_mnist_split(opts.data_root, "train"), 100),
                              subset(load_mnist_split(opts.data_root, "test"), 100));
  }
  return make_training_data(synthetic_split("synthetic-train", 100, opts.seed + 11),
                            synthetic_split("synthetic-test", 100, opts.seed + 12));
}

CheckResult make_result(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok, std::move(detail)};
}

}  // namespace

std::vector<CheckResult> run_invariant_checks(const CheckOptions& opts) {
  std::vector<CheckResult> out;
  std::mt19937_64 rng(opts.seed);

  {
    double worst = 0.0, worst_unit = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const RaggedTensor t = random_ragged(rng);
      long double acc = 0.0L;
      for (const auto& c : t.components())
        for (double x : c.values) acc += static_cast<long double>(x) * x;
      const double flat = static_cast<double>(std::sqrt(acc));
      worst = std::max(worst, std::abs(dual_norm(t) - flat) / flat);
      worst_unit = std::max(worst_unit, std::abs(dual_norm(unit(t)) - 1.0));
    }
    out.push_back(make_result("dual_norm_flat_l2", worst <= 1e-12,
                              "max rel err " + format_double(worst)));
    out.push_back(make_result("unit_norm", worst_unit <= 1e-9,
                              "max |norm-1| " + format_double(worst_unit)));
  }

  {
    RaggedTensor t;
    t.add_component("a", {3}, {1, 2, 3});
    t.add_component("b", {2}, {4, 5});
    const double err = std::abs(dual_norm(t) - std::sqrt(55.0));
    out.push_back(make_result("dual_norm_example", err <= 1e-12,
                              "err " + format_double(err)));
  }

  {
    RaggedTensor a;
    a.add_component("x", {2}, {1.0, 0.0});
    RaggedTensor b = scale(a, -1.0);
    const double d = check_bounded_difference(a, b);
    out.push_back(make_result("antipodal_bound", d >= 2.0 - 1e-9 && d <= 2.0 + 1e-9,
                              "d " + format_double(d)));
  }

  const TrainingData data = check_data(opts);
  const Mlp arch = Mlp::uniform_init({784, 16, 10}, Activation::tanh,
                                     stream_seed(opts.seed, RandomStream::init));
  TrainOptions topts;
  topts.iterations = std::max<std::size_t>(opts.iterations, 1);
  topts.batch_size = data.train.size();
  topts.loss = LossKind::mse;
  topts.check_invariants = false;

  auto run_kind = [&](OptimizerKind kind) {
    OptimizerConfig oc;
    oc.kind = kind;
    return train_run(arch, arch.params(), oc, data, topts);
  };

  const OptimizerRun ugd = run_kind(OptimizerKind::ugd);
  const OptimizerRun pugd = run_kind(OptimizerKind::pugd);

  {
    double max_dt = 0.0;
    std::size_t violations = 0;
    for (const auto* run : {&ugd, &pugd}) {
      for (const auto& r : run->steps) {
        if (r.d_t) max_dt = std::max(max_dt, *r.d_t);
        try {
          verify_step_invariants(r, run->config.kind);
        } catch (const InvariantViolation&) {
          ++violations;
        }
      }
    }
    out.push_back(make_result("bounded_difference", max_dt <= 2.0 + 1e-9,
                              "max d_t " + format_double(max_dt)));
    out.push_back(make_result("unit_step_length", violations == 0,
                              std::to_string(violations) + " violating steps"));
  }

  {
    double worst = 0.0;
    RaggedTensor wu = arch.params(), wn = arch.params();
    OptimizerState su, sn;
    OptimizerConfig cu, cn;
    cu.kind = OptimizerKind::ugd;
    cn.kind = OptimizerKind::ngd_fm;
    Schedule sched;
    sched.total_steps = topts.iterations;
    const GradientOracle oracle = [&](const RaggedTensor& w) {
      return arch.loss_and_grad_at(w, data.train_batch, LossKind::mse);
    };
    for (std::size_t t = 0; t < topts.iterations; ++t) {
      const double lr = lr_at(sched, t);
      optimizer_step(wu, oracle, lr, cu, su);
      optimizer_step(wn, oracle, lr, cn, sn);
      const auto fu = wu.flatten();
      const auto fn = wn.flatten();
      for (std::size_t i = 0; i < fu.size(); ++i)
        worst = std::max(worst, std::abs(fu[i] - fn[i]));
    }
    out.push_back(make_result("ugd_equals_ngd_fm", worst <= 1e-12,
                              std::to_string(topts.iterations) + " steps, max diff " +
                                  format_double(worst)));
  }

  {
    Schedule s;
    s.lr_max = 0.1;
    s.lr_min = 0.001;
    s.total_steps = 977;
    const bool ok = lr_at(s, 0) == s.lr_max && lr_at(s, s.total_steps) == s.lr_min;
    out.push_back(make_result("schedule_endpoints", ok, "cosine endpoints exact"));
  }

  {
    std::mt19937_64 grng(opts.seed + 5);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int c = 0; c < 5; ++c) {
      const std::vector<std::size_t> dims{4, 5, 3};
      const Mlp m = Mlp::uniform_init(dims, c % 2 ? Activation::relu : Activation::tanh,
                                      opts.seed + 100 + c);
      Batch b;
      b.inputs = Matrix(6, 4);
      b.targets = Matrix::Zero(6, 3);
      for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = normal(grng);
      for (Eigen::Index i = 0; i < 6; ++i) b.targets(i, i % 3) = 1.0;
      const LossKind kind = c % 3 ? LossKind::mse : LossKind::cross_entropy;
      const auto a = grad(m, b, kind).grad.flatten();
      const auto f = finite_diff_grad(m, b, kind).flatten();
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(f[i]), 1e-6});
        worst = std::max(worst, std::abs(a[i] - f[i]) / denom);
      }
    }
    out.push_back(make_result("gradient_check", worst < 1e-5,
                              "max rel err " + format_double(worst)));
  }

  {
    RaggedTensor w;
    w.add_component("w", {2}, {3.0, 4.0});
    OptimizerConfig oc;
    oc.kind = OptimizerKind::ugd;
    oc.weight_decay = 0.0;
    OptimizerState st;
    const GradientOracle bowl = [](const RaggedTensor& p) {
      return LossGrad{0.5 * inner(p, p), p};
    };
    std::size_t steps = 0;
    while (dual_norm(w) > 0.1 + 1e-9 && steps < 1000) {
      optimizer_step(w, bowl, 0.1, oc, st);
      ++steps;
    }
    out.push_back(make_result("isotropic_bowl", steps >= 49 && steps <= 50,
                              std::to_string(steps) + " steps"));
  }
  return out;
}

}  // namespace pugd
