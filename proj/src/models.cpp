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

#include "pugd/models.hpp"

#include <cmath>
#include <random>
#include <utility>

namespace pugd {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using RowVector = Eigen::RowVectorXd;

ConstMap weight_view(const RaggedTensor& params, std::size_t layer) {
  const auto& c = params.component(2 * layer);
  return ConstMap(c.values.data(), static_cast<Eigen::Index>(c.shape[0]),
                  static_cast<Eigen::Index>(c.shape[1]));
}

Eigen::Map<const RowVector> bias_view(const RaggedTensor& params,
                                      std::size_t layer) {
  const auto& c = params.component(2 * layer + 1);
  return Eigen::Map<const RowVector>(c.values.data(),
                                     static_cast<Eigen::Index>(c.size()));
}

void apply_activation(Activation act, Matrix& z) {
  if (act == Activation::tanh) {
    z = z.array().tanh();
  } else {
    z = z.array().max(0.0);
  }
}

/// Stable row-wise log-softmax.
Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

double loss_from_outputs(const Matrix& outputs, const Matrix& targets,
                         LossKind kind) {
  const auto n = static_cast<double>(outputs.rows());
  if (kind == LossKind::mse) {
    const auto k = static_cast<double>(outputs.cols());
    return 0.5 * (outputs - targets).squaredNorm() / (n * k);
  }
  return -(targets.array() * log_softmax(outputs).array()).sum() / n;
}

/// dL/d(outputs).
Matrix output_delta(const Matrix& outputs, const Matrix& targets,
                    LossKind kind) {
  const auto n = static_cast<double>(outputs.rows());
  if (kind == LossKind::mse) {
    const auto k = static_cast<double>(outputs.cols());
    return (outputs - targets) / (n * k);
  }
  Matrix probs = log_softmax(outputs).array().exp();
  const Eigen::VectorXd mass = targets.rowwise().sum();
  for (Eigen::Index i = 0; i < probs.rows(); ++i) probs.row(i) *= mass(i);
  return (probs - targets) / n;
}

}  // namespace

std::string to_string(Activation a) {
  return a == Activation::tanh ? "tanh" : "relu";
}

std::string to_string(LossKind k) {
  return k == LossKind::mse ? "mse" : "cross_entropy";
}

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + s + "'");
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "cross_entropy" || s == "ce") return LossKind::cross_entropy;
  throw ConfigError("unknown loss '" + s + "'");
}

Mlp::Mlp(std::vector<std::size_t> layer_dims, Activation activation)
    : dims_(std::move(layer_dims)), activation_(activation) {
  if (dims_.size() < 2) {
    throw ShapeMismatch("an MLP needs at least input and output dimensions");
  }
  for (std::size_t l = 1; l < dims_.size(); ++l) {
    params_.add_zeros("W" + std::to_string(l), {dims_[l], dims_[l - 1]});
    params_.add_zeros("b" + std::to_string(l), {dims_[l]});
  }
}

Mlp Mlp::uniform_init(std::vector<std::size_t> layer_dims,
                      Activation activation, std::uint64_t seed) {
  Mlp model(std::move(layer_dims), activation);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(model.dims_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : model.params_.values(2 * l)) v = dist(rng);
    for (double& v : model.params_.values(2 * l + 1)) v = dist(rng);
  }
  return model;
}

void Mlp::set_params(RaggedTensor params) {
  check_params(params);
  params_ = std::move(params);
}

void Mlp::check_params(const RaggedTensor& params) const {
  if (!params.congruent(params_)) {
    throw ShapeMismatch("parameter tensor does not match the MLP layout");
  }
}

void Mlp::check_batch(const Batch& batch) const {
  if (batch.inputs.rows() == 0) throw ShapeMismatch("empty batch");
  if (static_cast<std::size_t>(batch.inputs.cols()) != input_dim()) {
    throw ShapeMismatch("batch has " + std::to_string(batch.inputs.cols()) +
                        " input columns, model expects " +
                        std::to_string(input_dim()));
  }
  if (batch.targets.rows() != batch.inputs.rows() ||
      static_cast<std::size_t>(batch.targets.cols()) != output_dim()) {
    throw ShapeMismatch("batch targets do not match inputs/model output");
  }
}

Matrix Mlp::forward_at(const RaggedTensor& params, const Matrix& inputs) const {
  check_params(params);
  if (static_cast<std::size_t>(inputs.cols()) != input_dim()) {
    throw ShapeMismatch("input has " + std::to_string(inputs.cols()) +
                        " columns, model expects " + std::to_string(input_dim()));
  }
  Matrix a = inputs;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    Matrix z = a * weight_view(params, l).transpose();
    z.rowwise() += bias_view(params, l);
    if (l + 1 < num_layers()) apply_activation(activation_, z);
    a = std::move(z);
  }
  return a;
}

double Mlp::loss_at(const RaggedTensor& params, const Batch& batch,
                    LossKind kind) const {
  check_batch(batch);
  return loss_from_outputs(forward_at(params, batch.inputs), batch.targets,
                           kind);
}

LossGrad Mlp::loss_and_grad_at(const RaggedTensor& params, const Batch& batch,
                               LossKind kind) const {
  check_params(params);
  check_batch(batch);
  const std::size_t layers = num_layers();

  // acts[l] is the input to weight layer l; acts[layers] are the outputs.
  std::vector<Matrix> acts;
  acts.reserve(layers + 1);
  acts.push_back(batch.inputs);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = acts.back() * weight_view(params, l).transpose();
    z.rowwise() += bias_view(params, l);
    if (l + 1 < layers) apply_activation(activation_, z);
    acts.push_back(std::move(z));
  }

  LossGrad out;
  out.loss = loss_from_outputs(acts.back(), batch.targets, kind);
  out.grad = params.zeros_like();

  Matrix delta = output_delta(acts.back(), batch.targets, kind);
  for (std::size_t l = layers; l-- > 0;) {
    const auto& wc = params.component(2 * l);
    Eigen::Map<Matrix> dw(out.grad.values(2 * l).data(),
                          static_cast<Eigen::Index>(wc.shape[0]),
                          static_cast<Eigen::Index>(wc.shape[1]));
    dw.noalias() = delta.transpose() * acts[l];
    Eigen::Map<RowVector> db(out.grad.values(2 * l + 1).data(),
                             static_cast<Eigen::Index>(wc.shape[0]));
    db = delta.colwise().sum();
    if (l == 0) break;
    Matrix upstream = delta * weight_view(params, l);
    // acts[l] is the post-activation output of layer l-1.
    if (activation_ == Activation::tanh) {
      upstream.array() *= 1.0 - acts[l].array().square();
    } else {
      upstream.array() *= (acts[l].array() > 0.0).cast<double>();
    }
    delta = std::move(upstream);
  }
  return out;
}

Matrix forward(const Mlp& model, const Matrix& inputs) {
  return model.forward_at(model.params(), inputs);
}

double loss(const Mlp& model, const Batch& batch, LossKind kind) {
  return model.loss_at(model.params(), batch, kind);
}

LossGrad grad(const Mlp& model, const Batch& batch, LossKind kind) {
  return model.loss_and_grad_at(model.params(), batch, kind);
}

RaggedTensor finite_diff_grad(const Mlp& model, const Batch& batch,
                              LossKind kind, double h) {
  if (!(h > 0.0)) throw OutOfRange("finite difference step must be positive");
  RaggedTensor probe = model.params();
  RaggedTensor out = probe.zeros_like();
  for (std::size_t c = 0; c < probe.num_components(); ++c) {
    auto values = probe.values(c);
    auto dst = out.values(c);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + h;
      const double up = model.loss_at(probe, batch, kind);
      values[k] = saved - h;
      const double down = model.loss_at(probe, batch, kind);
      values[k] = saved;
      dst[k] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

double accuracy_at(const Mlp& model, const RaggedTensor& params,
                   const Batch& batch) {
  const Matrix out = model.forward_at(params, batch.inputs);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    Eigen::Index pred = 0;
    Eigen::Index truth = 0;
    out.row(i).maxCoeff(&pred);
    batch.targets.row(i).maxCoeff(&truth);
    if (pred == truth) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(out.rows());
}

}  // namespace pugd
