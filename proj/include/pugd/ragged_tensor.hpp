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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pugd/errors.hpp"

namespace pugd {

/// Normalizing anything whose dual-norm is at or below this raises ZeroNorm.
inline constexpr double kZeroNormGuard = 1e-12;

/// One named, arbitrarily-shaped array inside a RaggedTensor. Values are
/// stored flat in row-major order.
struct Component {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

std::size_t shape_size(std::span<const std::size_t> shape);

/// An ordered collection of differently-shaped real arrays, e.g. the full
/// parameter set of a network (W1, b1, W2, b2, ...). Gradients, perturbations
/// and landscape directions all live in this type.
class RaggedTensor {
 public:
  RaggedTensor() = default;
  explicit RaggedTensor(std::vector<Component> components);

  /// Appends a component. Throws ShapeMismatch if the value count does not
  /// match the shape or the name is already taken.
  void add_component(std::string name, std::vector<std::size_t> shape,
                     std::vector<double> values);
  void add_zeros(std::string name, std::vector<std::size_t> shape);

  const std::vector<Component>& components() const { return components_; }
  std::size_t num_components() const { return components_.size(); }
  std::size_t num_elements() const;
  bool empty() const { return components_.empty(); }

  const Component& component(std::size_t i) const { return components_.at(i); }
  std::span<double> values(std::size_t i) { return components_.at(i).values; }
  std::span<const double> values(std::size_t i) const {
    return components_.at(i).values;
  }

  /// Same names, order and shapes.
  bool congruent(const RaggedTensor& other) const;

  RaggedTensor zeros_like() const;

  /// All values concatenated in component order.
  std::vector<double> flatten() const;
  /// Overwrites values from a flat array laid out as flatten() produces.
  void assign_flat(std::span<const double> flat);

  friend bool operator==(const RaggedTensor& a, const RaggedTensor& b);

 private:
  std::vector<Component> components_;
};

/// Square root of the sum of squares over every element of every component
/// (the p = q = 2 dual-norm).
double dual_norm(const RaggedTensor& t);

/// t / dual_norm(t). Throws ZeroNorm when dual_norm(t) <= kZeroNormGuard.
RaggedTensor unit(const RaggedTensor& t);

/// Flat L2 norm of each component, in component order.
std::vector<double> component_norms(const RaggedTensor& t);

RaggedTensor add(const RaggedTensor& a, const RaggedTensor& b);
RaggedTensor sub(const RaggedTensor& a, const RaggedTensor& b);
RaggedTensor scale(const RaggedTensor& a, double s);
RaggedTensor mul(const RaggedTensor& a, const RaggedTensor& b);
RaggedTensor abs(const RaggedTensor& a);

/// Sum of elementwise products.
double inner(const RaggedTensor& a, const RaggedTensor& b);

/// y <- y + s * x
void axpy(double s, const RaggedTensor& x, RaggedTensor& y);

/// dual_norm(a - b).
double difference_norm(const RaggedTensor& a, const RaggedTensor& b);

void require_congruent(const RaggedTensor& a, const RaggedTensor& b,
                       const char* what);

// {name: {"shape": [...], "values": [...]}} with component order kept.
nlohmann::ordered_json to_json(const RaggedTensor& t);
RaggedTensor ragged_from_json(const nlohmann::ordered_json& j);

}  // namespace pugd
