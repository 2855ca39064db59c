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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pugd/models.hpp"
#include "pugd/ragged_tensor.hpp"

namespace pugd::testing {

inline RaggedTensor tensor(std::vector<std::vector<double>> comps) {
  RaggedTensor t;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::size_t n = comps[i].size();
    t.add_component("c" + std::to_string(i), {n}, std::move(comps[i]));
  }
  return t;
}

inline RaggedTensor random_tensor(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_int_distribution<int> ncomp(1, 5), dim(1, 6), rank(1, 3);
  std::normal_distribution<double> normal(0.0, scale);
  RaggedTensor t;
  const int k = ncomp(rng);
  for (int c = 0; c < k; ++c) {
    std::vector<std::size_t> shape(static_cast<std::size_t>(rank(rng)));
    std::size_t size = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(dim(rng));
      size *= d;
    }
    std::vector<double> v(size);
    for (auto& x : v) x = normal(rng);
    t.add_component("p" + std::to_string(c), shape, std::move(v));
  }
  return t;
}

/// Same component layout as `like`, fresh normal values.
inline RaggedTensor random_like(const RaggedTensor& like, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RaggedTensor t = like.zeros_like();
  for (std::size_t c = 0; c < t.num_components(); ++c)
    for (double& x : t.values(c)) x = normal(rng);
  return t;
}

/// Flat Euclidean norm of all values, computed independently of the library.
inline double flat_l2(const RaggedTensor& t) {
  long double s = 0.0L;
  for (const auto& c : t.components())
    for (double x : c.values) s += static_cast<long double>(x) * x;
  return static_cast<double>(std::sqrt(s));
}

inline Batch random_batch(std::mt19937_64& rng, std::size_t n, std::size_t in,
                          std::size_t out, bool one_hot) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Batch b;
  b.inputs = Matrix(n, in);
  b.targets = Matrix::Zero(n, out);
  for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = normal(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (one_hot)
      b.targets(i, i % out) = 1.0;
    else
      for (std::size_t j = 0; j < out; ++j) b.targets(i, j) = normal(rng);
  }
  return b;
}

}  // namespace pugd::testing
