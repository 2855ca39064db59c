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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pugd/ragged_tensor.hpp"

namespace pugd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation { tanh, relu };
enum class LossKind { mse, cross_entropy };

std::string to_string(Activation a);
std::string to_string(LossKind k);
Activation parse_activation(const std::string& s);
LossKind parse_loss_kind(const std::string& s);

/// Rows are samples. targets are one-hot rows for classification.
struct Batch {
  Matrix inputs;
  Matrix targets;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

struct LossGrad {
  double loss = 0.0;
  RaggedTensor grad;
};

/// Fully connected network. Hidden layers apply the activation, the output
/// layer emits raw values. Parameters are the components W1, b1, ..., Wk, bk
/// with Wi shaped [dims[i], dims[i-1]] (row-major) and bi shaped [dims[i]].
///
/// Every evaluation entry point takes the parameter tensor explicitly, so the
/// same architecture can be queried at perturbed or sliced weights without
/// touching the stored parameters.
class Mlp {
 public:
  /// Zero-initialized parameters.
  Mlp(std::vector<std::size_t> layer_dims, Activation activation);

  /// Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static Mlp uniform_init(std::vector<std::size_t> layer_dims,
                          Activation activation, std::uint64_t seed);

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  Activation activation() const { return activation_; }
  std::size_t num_layers() const { return dims_.size() - 1; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }

  const RaggedTensor& params() const { return params_; }
  RaggedTensor& params() { return params_; }
  void set_params(RaggedTensor params);

  Matrix forward_at(const RaggedTensor& params, const Matrix& inputs) const;
  double loss_at(const RaggedTensor& params, const Batch& batch,
                 LossKind kind) const;
  LossGrad loss_and_grad_at(const RaggedTensor& params, const Batch& batch,
                            LossKind kind) const;

 private:
  void check_params(const RaggedTensor& params) const;
  void check_batch(const Batch& batch) const;

  std::vector<std::size_t> dims_;
  Activation activation_;
  RaggedTensor params_;
};

Matrix forward(const Mlp& model, const Matrix& inputs);

/// Mean loss over the batch. MSE is 1/(2*n*k) * sum of squared errors, i.e.
/// it carries the 1/2 factor and averages over samples and outputs.
/// Cross-entropy is the mean of -sum_j t_j * log softmax(z)_j.
double loss(const Mlp& model, const Batch& batch, LossKind kind);

/// Loss and its analytic gradient (backpropagation) at the stored params.
LossGrad grad(const Mlp& model, const Batch& batch, LossKind kind);

/// Central differences (L(w + h e_j) - L(w - h e_j)) / 2h for every element.
RaggedTensor finite_diff_grad(const Mlp& model, const Batch& batch,
                              LossKind kind, double h = 1e-5);

/// Fraction of rows whose output argmax equals the target argmax.
double accuracy_at(const Mlp& model, const RaggedTensor& params,
                   const Batch& batch);

}  // namespace pugd
