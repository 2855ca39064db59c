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

#include "pugd/ragged_tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

namespace pugd {

std::size_t shape_size(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

RaggedTensor::RaggedTensor(std::vector<Component> components) {
  components_.reserve(components.size());
  for (auto& c : components) {
    add_component(std::move(c.name), std::move(c.shape), std::move(c.values));
  }
}

void RaggedTensor::add_component(std::string name,
                                 std::vector<std::size_t> shape,
                                 std::vector<double> values) {
  if (shape.empty()) {
    throw ShapeMismatch("component '" + name + "' has an empty shape");
  }
  for (std::size_t d : shape) {
    if (d == 0) {
      throw ShapeMismatch("component '" + name + "' has a zero dimension");
    }
  }
  if (values.size() != shape_size(shape)) {
    throw ShapeMismatch("component '" + name + "' holds " +
                        std::to_string(values.size()) +
                        " values but its shape needs " +
                        std::to_string(shape_size(shape)));
  }
  for (const auto& c : components_) {
    if (c.name == name) {
      throw ShapeMismatch("duplicate component name '" + name + "'");
    }
  }
  components_.push_back({std::move(name), std::move(shape), std::move(values)});
}

void RaggedTensor::add_zeros(std::string name, std::vector<std::size_t> shape) {
  std::vector<double> values(shape_size(shape), 0.0);
  add_component(std::move(name), std::move(shape), std::move(values));
}

std::size_t RaggedTensor::num_elements() const {
  std::size_t n = 0;
  for (const auto& c : components_) n += c.size();
  return n;
}

bool RaggedTensor::congruent(const RaggedTensor& other) const {
  if (components_.size() != other.components_.size()) return false;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& a = components_[i];
    const auto& b = other.components_[i];
    if (a.name != b.name || a.shape != b.shape) return false;
  }
  return true;
}

RaggedTensor RaggedTensor::zeros_like() const {
  RaggedTensor out = *this;
  for (auto& c : out.components_) std::fill(c.values.begin(), c.values.end(), 0.0);
  return out;
}

std::vector<double> RaggedTensor::flatten() const {
  std::vector<double> flat;
  flat.reserve(num_elements());
  for (const auto& c : components_) {
    flat.insert(flat.end(), c.values.begin(), c.values.end());
  }
  return flat;
}

void RaggedTensor::assign_flat(std::span<const double> flat) {
  if (flat.size() != num_elements()) {
    throw ShapeMismatch("flat array length " + std::to_string(flat.size()) +
                        " does not match tensor size " +
                        std::to_string(num_elements()));
  }
  std::size_t offset = 0;
  for (auto& c : components_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), c.size(),
                c.values.begin());
    offset += c.size();
  }
}

bool operator==(const RaggedTensor& a, const RaggedTensor& b) {
  if (!a.congruent(b)) return false;
  for (std::size_t i = 0; i < a.components_.size(); ++i) {
    if (a.components_[i].values != b.components_[i].values) return false;
  }
  return true;
}

void require_congruent(const RaggedTensor& a, const RaggedTensor& b,
                       const char* what) {
  if (!a.congruent(b)) {
    throw ShapeMismatch(std::string(what) + ": operands are not congruent");
  }
}

namespace {

template <typename Op>
RaggedTensor zip(const RaggedTensor& a, const RaggedTensor& b, const char* what,
                 Op op) {
  require_congruent(a, b, what);
  RaggedTensor out = a;
  for (std::size_t i = 0; i < out.num_components(); ++i) {
    auto dst = out.values(i);
    auto rhs = b.values(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = op(dst[k], rhs[k]);
  }
  return out;
}

template <typename Op>
RaggedTensor map(const RaggedTensor& a, Op op) {
  RaggedTensor out = a;
  for (std::size_t i = 0; i < out.num_components(); ++i) {
    for (double& v : out.values(i)) v = op(v);
  }
  return out;
}

double sum_squares(std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

}  // namespace

double dual_norm(const RaggedTensor& t) {
  // one running sum in flat element order, same as the concatenated vector
  double s = 0.0;
  for (const auto& c : t.components())
    for (double v : c.values) s += v * v;
  return std::sqrt(s);
}

RaggedTensor unit(const RaggedTensor& t) {
  const double n = dual_norm(t);
  if (!(n > kZeroNormGuard)) {
    throw ZeroNorm("cannot normalize a tensor with dual-norm " +
                   std::to_string(n));
  }
  return map(t, [n](double v) { return v / n; });
}

std::vector<double> component_norms(const RaggedTensor& t) {
  std::vector<double> norms;
  norms.reserve(t.num_components());
  for (const auto& c : t.components()) norms.push_back(std::sqrt(sum_squares(c.values)));
  return norms;
}

RaggedTensor add(const RaggedTensor& a, const RaggedTensor& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}

RaggedTensor sub(const RaggedTensor& a, const RaggedTensor& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

RaggedTensor scale(const RaggedTensor& a, double s) {
  return map(a, [s](double v) { return v * s; });
}

RaggedTensor mul(const RaggedTensor& a, const RaggedTensor& b) {
  return zip(a, b, "mul", [](double x, double y) { return x * y; });
}

RaggedTensor abs(const RaggedTensor& a) {
  return map(a, [](double v) { return std::fabs(v); });
}

double inner(const RaggedTensor& a, const RaggedTensor& b) {
  require_congruent(a, b, "inner");
  double s = 0.0;
  for (std::size_t i = 0; i < a.num_components(); ++i) {
    auto x = a.values(i);
    auto y = b.values(i);
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  }
  return s;
}

void axpy(double s, const RaggedTensor& x, RaggedTensor& y) {
  require_congruent(x, y, "axpy");
  for (std::size_t i = 0; i < y.num_components(); ++i) {
    auto dst = y.values(i);
    auto src = x.values(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += s * src[k];
  }
}

double difference_norm(const RaggedTensor& a, const RaggedTensor& b) {
  require_congruent(a, b, "difference_norm");
  double s = 0.0;
  for (std::size_t i = 0; i < a.num_components(); ++i) {
    auto x = a.values(i);
    auto y = b.values(i);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = x[k] - y[k];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

nlohmann::ordered_json to_json(const RaggedTensor& t) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& c : t.components()) {
    j[c.name] = {{"shape", c.shape}, {"values", c.values}};
  }
  return j;
}

RaggedTensor ragged_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ShapeMismatch("ragged tensor JSON must be an object");
  RaggedTensor t;
  for (const auto& [name, entry] : j.items()) {
    t.add_component(name, entry.at("shape").get<std::vector<std::size_t>>(),
                    entry.at("values").get<std::vector<double>>());
  }
  return t;
}

}  // namespace pugd
