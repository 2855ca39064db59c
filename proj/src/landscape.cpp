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

#include "pugd/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

namespace pugd {

namespace {

using FlatVector = Eigen::VectorXd;

RaggedTensor gaussian_like(const RaggedTensor& anchor, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RaggedTensor out = anchor.zeros_like();
  for (std::size_t c = 0; c < out.num_components(); ++c) {
    for (double& v : out.values(c)) v = normal(rng);
  }
  return out;
}

void filter_normalize(RaggedTensor& d, const RaggedTensor& anchor) {
  const auto target = component_norms(anchor);
  const auto current = component_norms(d);
  for (std::size_t c = 0; c < d.num_components(); ++c) {
    const double factor = current[c] > 0.0 ? target[c] / current[c] : 0.0;
    for (double& v : d.values(c)) v *= factor;
  }
}

FlatVector to_vector(const RaggedTensor& t) {
  const auto flat = t.flatten();
  return Eigen::Map<const FlatVector>(flat.data(),
                                      static_cast<Eigen::Index>(flat.size()));
}

RaggedTensor from_vector(const RaggedTensor& like, const FlatVector& v) {
  RaggedTensor out = like;
  out.assign_flat(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
  return out;
}

struct PowerResult {
  FlatVector vec;
  double eigenvalue = 0.0;
  std::size_t iterations = 0;
};

/// Dominant eigenpair of A^T A restricted to the complement of `deflate`.
/// Eigenvalues at or below `zero_eigenvalue` are reported as exactly 0.
PowerResult power_iterate(const Matrix& rows, FlatVector start,
                          const std::vector<FlatVector>& deflate,
                          double zero_eigenvalue, double tol,
                          std::size_t max_iterations) {
  auto project_out = [&deflate](FlatVector& v) {
    for (const auto& u : deflate) v -= u.dot(v) * u;
  };
  project_out(start);
  FlatVector v = start.normalized();
  PowerResult out;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    FlatVector w = rows.transpose() * (rows * v);
    project_out(w);
    const double lambda = w.norm();
    out.iterations = it;
    if (lambda <= zero_eigenvalue) {
      out.vec = v;
      out.eigenvalue = 0.0;
      return out;
    }
    w /= lambda;
    const double change = (w - v).norm();
    v = std::move(w);
    if (change <= tol) {
      out.vec = v;
      out.eigenvalue = lambda;
      return out;
    }
  }
  throw ConvergenceFailure("power iteration did not converge within " +
                           std::to_string(max_iterations) + " iterations");
}

FlatVector deterministic_start(Eigen::Index n, std::uint64_t salt) {
  std::mt19937_64 rng(0x5eed5eedULL ^ salt);
  std::normal_distribution<double> normal(0.0, 1.0);
  FlatVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace

std::string to_string(DirectionMode m) {
  switch (m) {
    case DirectionMode::filter_norm: return "filter_norm";
    case DirectionMode::unit: return "unit";
    case DirectionMode::pca: return "pca";
  }
  return "unknown";
}

DirectionMode parse_direction_mode(const std::string& s) {
  if (s == "filter_norm") return DirectionMode::filter_norm;
  if (s == "unit") return DirectionMode::unit;
  if (s == "pca") return DirectionMode::pca;
  throw ConfigError("unknown direction mode '" + s + "'");
}

DirectionPair random_directions(const RaggedTensor& anchor, DirectionMode mode,
                                std::uint64_t seed) {
  if (anchor.empty()) throw ShapeMismatch("random_directions: empty anchor");
  if (mode == DirectionMode::pca) {
    throw ConfigError("pca directions come from pca_directions()");
  }
  std::mt19937_64 rng(seed);
  DirectionPair pair;
  pair.d1 = gaussian_like(anchor, rng);
  pair.d2 = gaussian_like(anchor, rng);
  pair.normalization = mode;
  pair.seed = seed;
  if (mode == DirectionMode::filter_norm) {
    filter_normalize(pair.d1, anchor);
    filter_normalize(pair.d2, anchor);
  } else {
    pair.d1 = unit(pair.d1);
    pair.d2 = unit(pair.d2);
  }
  return pair;
}

RaggedTensor slice_params(const RaggedTensor& anchor, const DirectionPair& pair,
                          double alpha, double beta) {
  require_congruent(anchor, pair.d1, "slice_params");
  require_congruent(anchor, pair.d2, "slice_params");
  RaggedTensor out = anchor;
  for (std::size_t c = 0; c < out.num_components(); ++c) {
    auto w = out.values(c);
    auto x = pair.d1.values(c);
    auto y = pair.d2.values(c);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += alpha * x[k] + beta * y[k];
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  if (n == 0) return out;
  if (n == 1) return {lo};
  out.reserve(n);
  const double span = hi - lo;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(i + 1 == n ? hi
                             : lo + span * static_cast<double>(i) /
                                        static_cast<double>(n - 1));
  }
  return out;
}

LandscapeGrid evaluate_grid(const RaggedTensor& anchor,
                            const DirectionPair& pair,
                            const std::vector<double>& alphas,
                            const std::vector<double>& betas,
                            const LossFunction& train_loss,
                            const LossFunction* test_loss,
                            const GridOptions& options) {
  for (const auto* axis : {&alphas, &betas}) {
    if (axis->empty()) throw OutOfRange("grid axis is empty");
    if (!std::is_sorted(axis->begin(), axis->end())) {
      throw OutOfRange("grid axis is not sorted");
    }
  }
  require_congruent(anchor, pair.d1, "evaluate_grid");
  require_congruent(anchor, pair.d2, "evaluate_grid");

  LandscapeGrid grid;
  grid.alphas = alphas;
  grid.betas = betas;
  const std::size_t cells = alphas.size() * betas.size();
  grid.train_loss.assign(cells, 0.0);
  if (test_loss) grid.test_loss.emplace(cells, 0.0);
  grid.clipped.assign(cells, 0);

  const double ceiling = options.clip_ceiling;
  auto clip = [ceiling](double v, std::uint8_t bit, std::uint8_t& flags) {
    if (!std::isfinite(v) || v > ceiling) {
      flags |= bit;
      return ceiling;
    }
    return v;
  };
  auto eval_cell = [&](std::size_t cell) {
    const std::size_t i = cell / betas.size();
    const std::size_t j = cell % betas.size();
    const RaggedTensor w = slice_params(anchor, pair, alphas[i], betas[j]);
    std::uint8_t flags = 0;
    grid.train_loss[cell] = clip(train_loss(w), kTrainClipped, flags);
    if (test_loss) (*grid.test_loss)[cell] = clip((*test_loss)(w), kTestClipped, flags);
    grid.clipped[cell] = flags;
  };

  // Each worker owns a strided set of cells and writes only those slots.
  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, cells);
  if (workers == 1) {
    for (std::size_t cell = 0; cell < cells; ++cell) eval_cell(cell);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t cell = w; cell < cells; cell += workers) eval_cell(cell);
      });
    }
  }
  return grid;
}

LandscapeGrid evaluate_grid(const RaggedTensor& anchor,
                            const DirectionPair& pair,
                            const std::vector<double>& alphas,
                            const std::vector<double>& betas, const Mlp& model,
                            const Batch& train, const Batch* test,
                            LossKind kind, const GridOptions& options) {
  const LossFunction train_fn = [&](const RaggedTensor& w) {
    return model.loss_at(w, train, kind);
  };
  LossFunction test_fn;
  if (test) {
    test_fn = [&](const RaggedTensor& w) { return model.loss_at(w, *test, kind); };
  }
  LandscapeGrid grid = evaluate_grid(anchor, pair, alphas, betas, train_fn,
                                     test ? &test_fn : nullptr, options);
  grid.anchor_meta["layer_dims"] = model.layer_dims();
  grid.anchor_meta["activation"] = to_string(model.activation());
  grid.anchor_meta["loss"] = to_string(kind);
  grid.anchor_meta["train_samples"] = train.size();
  if (test) grid.anchor_meta["test_samples"] = test->size();
  grid.anchor_meta["direction_mode"] = to_string(pair.normalization);
  grid.anchor_meta["direction_seed"] = pair.seed;
  grid.anchor_meta["anchor_dual_norm"] = dual_norm(anchor);
  return grid;
}

std::vector<PlaneCoord> project_trajectory(
    const std::vector<RaggedTensor>& snapshots, const RaggedTensor& anchor,
    const DirectionPair& pair) {
  require_congruent(anchor, pair.d1, "project_trajectory");
  require_congruent(anchor, pair.d2, "project_trajectory");
  const double g11 = inner(pair.d1, pair.d1);
  const double g12 = inner(pair.d1, pair.d2);
  const double g22 = inner(pair.d2, pair.d2);
  const double det = g11 * g22 - g12 * g12;
  if (!(g11 > 0.0 && g22 > 0.0) || det <= 1e-12 * g11 * g22) {
    throw DegenerateBasis("direction pair does not span a plane");
  }
  std::vector<PlaneCoord> coords;
  coords.reserve(snapshots.size());
  for (const auto& w : snapshots) {
    const RaggedTensor offset = sub(w, anchor);
    const double r1 = inner(offset, pair.d1);
    const double r2 = inner(offset, pair.d2);
    coords.push_back({(g22 * r1 - g12 * r2) / det, (g11 * r2 - g12 * r1) / det});
  }
  return coords;
}

PcaResult pca_directions_detailed(const std::vector<RaggedTensor>& snapshots,
                                  const RaggedTensor& anchor, double tol,
                                  std::size_t max_iterations) {
  if (snapshots.size() < 3) {
    throw OutOfRange("pca_directions needs at least 3 snapshots");
  }
  const auto n = static_cast<Eigen::Index>(anchor.num_elements());
  Matrix rows(static_cast<Eigen::Index>(snapshots.size()), n);
  const FlatVector origin = to_vector(anchor);
  for (std::size_t t = 0; t < snapshots.size(); ++t) {
    require_congruent(anchor, snapshots[t], "pca_directions");
    rows.row(static_cast<Eigen::Index>(t)) = (to_vector(snapshots[t]) - origin).transpose();
  }

  // The scale below which an eigenvalue counts as zero is tied to the data.
  const double zero_eigenvalue = 1e-12 * std::max(rows.squaredNorm(), 1e-300);

  FlatVector start1 = rows.row(rows.rows() - 1).transpose();
  if (start1.norm() == 0.0) start1 = deterministic_start(n, 1);
  PowerResult first = power_iterate(rows, start1, {}, zero_eigenvalue, tol,
                                    max_iterations);
  if (first.eigenvalue == 0.0) {
    throw DegenerateBasis("snapshots coincide with the anchor");
  }
  PowerResult second = power_iterate(rows, deterministic_start(n, 2),
                                     {first.vec}, zero_eigenvalue, tol,
                                     max_iterations);
  // Re-orthogonalize against d1 to remove drift.
  second.vec -= first.vec.dot(second.vec) * first.vec;
  second.vec.normalize();

  PcaResult out;
  out.pair.d1 = from_vector(anchor, first.vec);
  out.pair.d2 = from_vector(anchor, second.vec);
  out.pair.normalization = DirectionMode::pca;
  out.pair.seed = 0;
  out.eigenvalue1 = first.eigenvalue;
  out.eigenvalue2 = second.eigenvalue;
  out.iterations = first.iterations + second.iterations;
  return out;
}

DirectionPair pca_directions(const std::vector<RaggedTensor>& snapshots,
                             const RaggedTensor& anchor) {
  return pca_directions_detailed(snapshots, anchor).pair;
}

double local_loss_variance(const RaggedTensor& anchor, const DirectionPair& pair,
                           double alpha, double beta, double radius,
                           const LossFunction& loss, std::size_t samples) {
  std::vector<double> values;
  values.reserve(samples + 1);
  values.push_back(loss(slice_params(anchor, pair, alpha, beta)));
  for (std::size_t k = 0; k < samples; ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(samples);
    values.push_back(loss(slice_params(anchor, pair, alpha + radius * std::cos(theta),
                                       beta + radius * std::sin(theta))));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return var / static_cast<double>(values.size());
}

}  // namespace pugd
