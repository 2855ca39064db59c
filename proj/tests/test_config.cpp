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

#include <cstdlib>
#include <set>

#include "pugd/config.hpp"
#include "pugd/errors.hpp"

using namespace pugd;

TEST(KeyValueConfig, ParsesCommentsAndOverrides) {
  const auto kv = KeyValueConfig::parse(
      "# comment\n\n  seed = 4 \niterations=10\nseed = 7\noptimizers = ugd, , pugd\n");
  EXPECT_EQ(kv.get_int("seed", 0), 7);
  EXPECT_EQ(kv.get_int("iterations", 0), 10);
  EXPECT_EQ(kv.get_list("optimizers", {}), (std::vector<std::string>{"ugd", "pugd"}));
  EXPECT_FALSE(kv.get("missing").has_value());
  EXPECT_EQ(kv.get_double("missing", 2.5), 2.5);
  EXPECT_EQ(kv.dump(), "iterations = 10\noptimizers = ugd, , pugd\nseed = 7\n");
}

TEST(KeyValueConfig, Errors) {
  EXPECT_THROW(KeyValueConfig::parse("no equals sign"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse(" = 3"), ConfigError);
  const auto kv = KeyValueConfig::parse("x = 1.5\nb = maybe\nn = 12abc");
  EXPECT_THROW(kv.get_int("x", 0), ConfigError);
  EXPECT_THROW(kv.get_int("n", 0), ConfigError);
  EXPECT_THROW(kv.get_bool("b", false), ConfigError);
  EXPECT_THROW(KeyValueConfig::load("/nonexistent/file.cfg"), ConfigError);
}

TEST(KeyValueConfig, Booleans) {
  const auto kv = KeyValueConfig::parse("a = TRUE\nb = off\nc = 1");
  EXPECT_TRUE(kv.get_bool("a", false));
  EXPECT_FALSE(kv.get_bool("b", true));
  EXPECT_TRUE(kv.get_bool("c", false));
}

TEST(ExperimentConfig, RoundTripsThroughKeyValues) {
  for (auto kind : {ExperimentKind::shared_landscape_race, ExperimentKind::train_history,
                    ExperimentKind::landscape_3d, ExperimentKind::trajectory_2d}) {
    ExperimentConfig cfg = default_config(kind);
    cfg.seed = 17;
    cfg.landscape.direction_seed = 99;
    cfg.optimizers.front().lr_max = 0.05;
    const std::string text = cfg.to_key_values().dump();
    const ExperimentConfig back =
        ExperimentConfig::from_key_values(KeyValueConfig::parse(text));
    EXPECT_EQ(back.to_key_values().dump(), text) << to_string(kind);
    EXPECT_NO_THROW(back.validate());
  }
}

TEST(ExperimentConfig, RaceDefaults) {
  const ExperimentConfig cfg = default_config(ExperimentKind::shared_landscape_race);
  EXPECT_EQ(cfg.iterations, 10000u);
  EXPECT_EQ(cfg.perturbed_iterations, 5000u);
  EXPECT_EQ(cfg.batch_size, 100u);
  EXPECT_EQ(cfg.landscape.start_alpha, -10.1);
  EXPECT_EQ(cfg.landscape.start_beta, -15.0);
  EXPECT_EQ(cfg.model.layer_dims, (std::vector<std::size_t>{784, 16, 10}));
  EXPECT_EQ(cfg.optimizers.size(), all_optimizer_kinds().size());
  for (const auto& o : cfg.optimizers) {
    EXPECT_EQ(o.lr_max, 0.1);
    EXPECT_EQ(o.weight_decay, 5e-4);
  }
}

TEST(ExperimentConfig, PerturbedIterationsDefaultToHalf) {
  auto cfg = ExperimentConfig::from_key_values(KeyValueConfig::parse("iterations = 301"));
  EXPECT_EQ(cfg.iterations, 301u);
  EXPECT_EQ(cfg.perturbed_iterations, 150u);
  EXPECT_EQ(cfg.iterations_for(OptimizerKind::pugd), 150u);
  EXPECT_EQ(cfg.iterations_for(OptimizerKind::ugd), 301u);
  cfg = ExperimentConfig::from_key_values(
      KeyValueConfig::parse("iterations = 300\nperturbed_iterations = 300"));
  EXPECT_EQ(cfg.perturbed_iterations, 300u);
  cfg = ExperimentConfig::from_key_values(KeyValueConfig::parse("iterations = 1"));
  EXPECT_EQ(cfg.perturbed_iterations, 1u);
}

TEST(ExperimentConfig, OptimizerOverrides) {
  const auto cfg = ExperimentConfig::from_key_values(KeyValueConfig::parse(
      "optimizers = sgd, sam\noptimizer.momentum = 0.5\noptimizer.sam.rho = 0.2\n"
      "optimizer.sgd.nesterov = yes"));
  ASSERT_EQ(cfg.optimizers.size(), 2u);
  EXPECT_EQ(cfg.optimizers[0].momentum, 0.5);
  EXPECT_TRUE(cfg.optimizers[0].nesterov);
  EXPECT_EQ(cfg.optimizers[1].effective_rho(), 0.2);
  EXPECT_THROW(ExperimentConfig::from_key_values(KeyValueConfig::parse("optimizer.bogus = 1")),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_key_values(KeyValueConfig::parse("optimizer.adam.lr_max = 1")),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_key_values(KeyValueConfig::parse("experiment = nope")),
               ConfigError);
}

TEST(ExperimentConfig, Validation) {
  auto cfg = default_config(ExperimentKind::shared_landscape_race);
  EXPECT_NO_THROW(cfg.validate());
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = default_config(ExperimentKind::shared_landscape_race);
  cfg.batch_size = 101;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = default_config(ExperimentKind::shared_landscape_race);
  cfg.optimizers.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = default_config(ExperimentKind::shared_landscape_race);
  cfg.landscape.direction_mode = DirectionMode::pca;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = default_config(ExperimentKind::shared_landscape_race);
  cfg.schedule.lr_min = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_key_values(KeyValueConfig::parse("iterations = -3")),
               ConfigError);
}

TEST(ExperimentConfig, DataRootFromEnvironment) {
  ExperimentConfig cfg;
  cfg.data.root = "/explicit";
  EXPECT_EQ(cfg.data_root(), "/explicit");
  cfg.data.root.clear();
  const char* old = std::getenv("PUGD_DATA_ROOT");
  const std::string saved = old ? old : "";
  ::setenv("PUGD_DATA_ROOT", "/from/env", 1);
  EXPECT_EQ(cfg.data_root(), "/from/env");
  ::unsetenv("PUGD_DATA_ROOT");
  EXPECT_THROW(cfg.data_root(), ConfigError);
  if (old) ::setenv("PUGD_DATA_ROOT", saved.c_str(), 1);
}

TEST(Seeds, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Seeds, StreamsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t m = 0; m < 50; ++m)
    for (auto s : {RandomStream::init, RandomStream::shuffle, RandomStream::directions})
      seen.insert(stream_seed(m, s));
  EXPECT_EQ(seen.size(), 150u);
  EXPECT_EQ(stream_seed(3, RandomStream::init), stream_seed(3, RandomStream::init));
}

TEST(ExperimentKind, Names) {
  for (auto k : {ExperimentKind::shared_landscape_race, ExperimentKind::train_history,
                 ExperimentKind::landscape_3d, ExperimentKind::trajectory_2d})
    EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
  EXPECT_EQ(parse_experiment_kind("race"), ExperimentKind::shared_landscape_race);
}
