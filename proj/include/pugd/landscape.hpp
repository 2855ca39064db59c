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
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pugd/models.hpp"
#include "pugd/ragged_tensor.hpp"

namespace pugd {

enum class DirectionMode { filter_norm, unit, pca };

std::string to_string(DirectionMode m);
DirectionMode parse_direction_mode(const std::string& s);

/// Basis of the plane w(alpha, beta) = anchor + alpha * d1 + beta * d2.
struct DirectionPair {
  RaggedTensor d1;
  RaggedTensor d2;
  DirectionMode normalization = DirectionMode::filter_norm;
  std::uint64_t seed = 0;
};

/// Two independent standard-normal tensors congruent to the anchor.
/// filter_norm rescales each component to the anchor component's flat L2
/// norm; unit rescales each whole tensor to dual-norm 1. Deterministic per
/// seed. pca is not a valid mode here.
DirectionPair random_directions(const RaggedTensor& anchor, DirectionMode mode,
                                std::uint64_t seed);

/// anchor + alpha * d1 + beta * d2; the anchor is not modified.
RaggedTensor slice_params(const RaggedTensor& anchor, const DirectionPair& pair,
                          double alpha, double beta);

using LossFunction = std::function<double(const RaggedTensor&)>;

inline constexpr std::uint8_t kTrainClipped = 1u << 0;
inline constexpr std::uint8_t kTestClipped = 1u << 1;

/// Loss values over alphas x betas, stored row-major with alpha as the row.
struct LandscapeGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<double> train_loss;
  std::optional<std::vector<double>> test_loss;
  std::vector<std::uint8_t> clipped;
  nlohmann::ordered_json anchor_meta = nlohmann::ordered_json::object();

  std::size_t rows() const { return alphas.size(); }
  std::size_t cols() const { return betas.size(); }
  double train_at(std::size_t i, std::size_t j) const {
    return train_loss[i * cols() + j];
  }
  double test_at(std::size_t i, std::size_t j) const {
    return (*test_loss)[i * cols() + j];
  }
};

struct GridOptions {
  /// Losses above this (or non-finite) are stored as the ceiling and flagged.
  double clip_ceiling = 1e6;
  /// Worker threads; results do not depend on the count.
  std::size_t threads = 1;
};

/// Evaluates the loss functions at every (alpha, beta). Axes must be
/// non-empty and sorted ascending (OutOfRange otherwise). The loss functions
/// are called concurrently when threads > 1.
LandscapeGrid evaluate_grid(const RaggedTensor& anchor,
                            const DirectionPair& pair,
                            const std::vector<double>& alphas,
                            const std::vector<double>& betas,
                            const LossFunction& train_loss,
                            const LossFunction* test_loss = nullptr,
                            const GridOptions& options = {});

/// Convenience overload evaluating an MLP on whole batches.
LandscapeGrid evaluate_grid(const RaggedTensor& anchor,
                            const DirectionPair& pair,
                            const std::vector<double>& alphas,
                            const std::vector<double>& betas, const Mlp& model,
                            const Batch& train, const Batch* test,
                            LossKind kind, const GridOptions& options = {});

/// n evenly spaced values from lo to hi inclusive (n = 1 gives {lo}).
std::vector<double> linspace(double lo, double hi, std::size_t n);

struct PlaneCoord {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Least-squares coordinates of each snapshot in the plane, from the 2x2
/// normal equations. Throws DegenerateBasis if the Gram matrix of (d1, d2) is
/// singular within 1e-12 (relative to its diagonal).
std::vector<PlaneCoord> project_trajectory(
    const std::vector<RaggedTensor>& snapshots, const RaggedTensor& anchor,
    const DirectionPair& pair);

struct PcaResult {
  DirectionPair pair;
  double eigenvalue1 = 0.0;
  double eigenvalue2 = 0.0;
  std::size_t iterations = 0;
};

/// Top two principal directions of the anchor-centered snapshots (rows
/// w_t - anchor), by power iteration with deflation. Results are orthonormal
/// under the dual-norm inner product. Needs at least 3 snapshots; throws
/// ConvergenceFailure when an eigenvector has not settled to within `tol`
/// after `max_iterations`.
PcaResult pca_directions_detailed(const std::vector<RaggedTensor>& snapshots,
                                  const RaggedTensor& anchor,
                                  double tol = 1e-10,
                                  std::size_t max_iterations = 1000);

DirectionPair pca_directions(const std::vector<RaggedTensor>& snapshots,
                             const RaggedTensor& anchor);

/// Population variance of the loss over `samples` points evenly spaced on a
/// circle of the given radius around (alpha, beta), plus the centre. A small
/// value marks a flat neighbourhood in the slice.
double local_loss_variance(const RaggedTensor& anchor, const DirectionPair& pair,
                           double alpha, double beta, double radius,
                           const LossFunction& loss, std::size_t samples = 16);

}  // namespace pugd
