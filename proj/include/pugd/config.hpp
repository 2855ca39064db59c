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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pugd/landscape.hpp"
#include "pugd/models.hpp"
#include "pugd/optimizers.hpp"
#include "pugd/schedules.hpp"

namespace pugd {

/// Flat `key = value` text with dotted section keys. Blank lines and lines
/// starting with '#' are ignored; a later assignment overrides an earlier one.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list, whitespace trimmed, empty items dropped.
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;

  /// Keys in sorted order, one `key = value` per line.
  std::string dump() const;
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

enum class ExperimentKind {
  train_history,
  landscape_3d,
  trajectory_2d,
  shared_landscape_race
};

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

enum class ScheduleGranularity { step, epoch };

struct ModelSpec {
  std::vector<std::size_t> layer_dims{784, 16, 10};
  Activation activation = Activation::tanh;
  LossKind loss = LossKind::mse;
};

struct DataSpec {
  /// Directory holding the IDX files. Empty means: $PUGD_DATA_ROOT.
  std::string root;
  std::size_t train_subset = 100;
  std::size_t test_subset = 100;
};

enum class AnchorSource { init, trained };

struct LandscapeSpec {
  DirectionMode direction_mode = DirectionMode::filter_norm;
  /// Unset: derived from the master seed.
  std::optional<std::uint64_t> direction_seed;
  AnchorSource anchor = AnchorSource::init;
  /// When true the axes cover every sampled trajectory point with a margin.
  bool auto_axes = true;
  double alpha_min = -1.0;
  double alpha_max = 1.0;
  double beta_min = -1.0;
  double beta_max = 1.0;
  std::size_t resolution = 41;
  double start_alpha = -10.1;
  double start_beta = -15.0;
  double clip_ceiling = 1e6;
  /// Radius of the flatness probe around each endpoint.
  double flatness_radius = 0.5;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::shared_landscape_race;
  ModelSpec model;
  DataSpec data;
  std::vector<OptimizerConfig> optimizers;
  Schedule schedule;
  ScheduleGranularity granularity = ScheduleGranularity::step;
  /// Optimizer steps for non-perturbed kinds.
  std::size_t iterations = 10000;
  /// Optimizer steps for sam, asam and pugd.
  std::size_t perturbed_iterations = 5000;
  std::size_t batch_size = 100;
  std::size_t sample_stride = 100;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::size_t threads = 1;
  LandscapeSpec landscape;

  /// Throws ConfigError on any violated constraint.
  void validate() const;
  std::size_t iterations_for(OptimizerKind k) const {
    return is_perturbed(k) ? perturbed_iterations : iterations;
  }
  std::filesystem::path data_root() const;

  KeyValueConfig to_key_values() const;
  static ExperimentConfig from_key_values(const KeyValueConfig& kv);
};

/// Defaults per experiment: lr 0.1, weight decay 5e-4, momentum 0.9, no
/// Nesterov, cosine annealing.
ExperimentConfig default_config(ExperimentKind kind);

enum class RandomStream : std::uint64_t { init = 1, shuffle = 2, directions = 3 };

/// Independent seed for one purpose, derived from the master seed.
std::uint64_t stream_seed(std::uint64_t master, RandomStream purpose);

/// 64-bit FNV-1a, used to fingerprint resolved configs.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace pugd
