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

#include "pugd/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "pugd/errors.hpp"
#include "pugd/format.hpp"

namespace pugd {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return value;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

std::size_t get_count(const KeyValueConfig& kv, const std::string& key,
                      std::size_t fallback) {
  const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError("key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

OptimizerConfig optimizer_of(OptimizerKind k) {
  OptimizerConfig o;
  o.kind = k;
  return o;
}

constexpr const char* kOptimizerFields[] = {"lr_max",   "weight_decay", "momentum",
                                            "nesterov", "rho",          "eps"};

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                   : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    kv.set(key, value);
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string& key,
                                     std::int64_t fallback) const {
  const auto v = get(key);
  return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::get_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::vector<std::string> out;
  std::string_view rest = *v;
  while (true) {
    const auto comma = rest.find(',');
    std::string item = trim(rest.substr(0, comma));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

std::string KeyValueConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::train_history: return "train_history";
    case ExperimentKind::landscape_3d: return "landscape_3d";
    case ExperimentKind::trajectory_2d: return "trajectory_2d";
    case ExperimentKind::shared_landscape_race: return "shared_landscape_race";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "train_history" || s == "history") return ExperimentKind::train_history;
  if (s == "landscape_3d" || s == "landscape") return ExperimentKind::landscape_3d;
  if (s == "trajectory_2d" || s == "trajectory") return ExperimentKind::trajectory_2d;
  if (s == "shared_landscape_race" || s == "race") {
    return ExperimentKind::shared_landscape_race;
  }
  throw ConfigError("unknown experiment '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (perturbed_iterations < 1) throw ConfigError("perturbed_iterations must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (batch_size > data.train_subset) {
    throw ConfigError("batch_size " + std::to_string(batch_size) +
                      " exceeds the training subset of " +
                      std::to_string(data.train_subset));
  }
  if (data.train_subset < 1 || data.test_subset < 1) {
    throw ConfigError("data subsets must be non-empty");
  }
  if (sample_stride < 1) throw ConfigError("sample_stride must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (optimizers.empty()) throw ConfigError("no optimizers configured");
  if (model.layer_dims.size() < 2) throw ConfigError("model.layers needs >= 2 entries");
  for (std::size_t d : model.layer_dims) {
    if (d == 0) throw ConfigError("model.layers entries must be positive");
  }
  for (const auto& o : optimizers) o.validate();
  if (!(schedule.lr_min >= 0.0)) throw ConfigError("schedule.lr_min must be >= 0");
  for (const auto& o : optimizers) {
    if (schedule.lr_min > o.lr_max) {
      throw ConfigError("schedule.lr_min exceeds lr_max of " + to_string(o.kind));
    }
  }
  if (landscape.resolution < 1) throw ConfigError("landscape.resolution must be >= 1");
  if (!landscape.auto_axes && (landscape.alpha_min > landscape.alpha_max ||
                               landscape.beta_min > landscape.beta_max)) {
    throw ConfigError("landscape axis bounds are reversed");
  }
  if (!(landscape.clip_ceiling > 0.0)) throw ConfigError("landscape.clip must be > 0");
  if (landscape.direction_mode == DirectionMode::pca &&
      experiment != ExperimentKind::trajectory_2d) {
    throw ConfigError("pca directions are only available for trajectory_2d");
  }
}

std::filesystem::path ExperimentConfig::data_root() const {
  if (!data.root.empty()) return data.root;
  if (const char* env = std::getenv("PUGD_DATA_ROOT"); env && *env) return env;
  throw ConfigError("no dataset root: set data.root or PUGD_DATA_ROOT");
}

KeyValueConfig ExperimentConfig::to_key_values() const {
  KeyValueConfig kv;
  kv.set("experiment", to_string(experiment));
  kv.set("seed", std::to_string(seed));
  kv.set("iterations", std::to_string(iterations));
  kv.set("perturbed_iterations", std::to_string(perturbed_iterations));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("sample_stride", std::to_string(sample_stride));
  kv.set("output_dir", output_dir);
  kv.set("threads", std::to_string(threads));

  std::vector<std::string> dims;
  for (std::size_t d : model.layer_dims) dims.push_back(std::to_string(d));
  kv.set("model.layers", join(dims));
  kv.set("model.activation", to_string(model.activation));
  kv.set("model.loss", to_string(model.loss));

  kv.set("data.root", data.root);
  kv.set("data.train_subset", std::to_string(data.train_subset));
  kv.set("data.test_subset", std::to_string(data.test_subset));

  std::vector<std::string> names;
  for (const auto& o : optimizers) {
    const std::string name = to_string(o.kind);
    names.push_back(name);
    const std::string p = "optimizer." + name + ".";
    kv.set(p + "lr_max", format_double(o.lr_max));
    kv.set(p + "weight_decay", format_double(o.weight_decay));
    kv.set(p + "momentum", format_double(o.momentum));
    kv.set(p + "nesterov", o.nesterov ? "true" : "false");
    kv.set(p + "rho", format_double(o.effective_rho()));
    kv.set(p + "eps", format_double(o.eps));
  }
  kv.set("optimizers", join(names));

  kv.set("schedule.kind", to_string(schedule.kind));
  kv.set("schedule.lr_min", format_double(schedule.lr_min));
  kv.set("schedule.granularity",
         granularity == ScheduleGranularity::step ? "step" : "epoch");

  const auto& l = landscape;
  kv.set("landscape.direction_mode", to_string(l.direction_mode));
  if (l.direction_seed) kv.set("landscape.direction_seed", std::to_string(*l.direction_seed));
  kv.set("landscape.anchor", l.anchor == AnchorSource::init ? "init" : "trained");
  kv.set("landscape.axes", l.auto_axes ? "auto" : "fixed");
  kv.set("landscape.alpha_min", format_double(l.alpha_min));
  kv.set("landscape.alpha_max", format_double(l.alpha_max));
  kv.set("landscape.beta_min", format_double(l.beta_min));
  kv.set("landscape.beta_max", format_double(l.beta_max));
  kv.set("landscape.resolution", std::to_string(l.resolution));
  kv.set("landscape.start_alpha", format_double(l.start_alpha));
  kv.set("landscape.start_beta", format_double(l.start_beta));
  kv.set("landscape.clip", format_double(l.clip_ceiling));
  kv.set("landscape.flatness_radius", format_double(l.flatness_radius));
  return kv;
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValueConfig& kv) {
  const ExperimentKind kind =
      parse_experiment_kind(kv.get_string("experiment", "shared_landscape_race"));
  ExperimentConfig cfg = default_config(kind);

  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<std::int64_t>(cfg.seed)));
  cfg.iterations = get_count(kv, "iterations", cfg.iterations);
  cfg.perturbed_iterations = get_count(kv, "perturbed_iterations",
                                       kv.has("iterations") && !kv.has("perturbed_iterations")
                                           ? std::max<std::size_t>(cfg.iterations / 2, 1)
                                           : cfg.perturbed_iterations);
  cfg.batch_size = get_count(kv, "batch_size", cfg.batch_size);
  cfg.sample_stride = get_count(kv, "sample_stride", cfg.sample_stride);
  cfg.output_dir = kv.get_string("output_dir", cfg.output_dir);
  cfg.threads = get_count(kv, "threads", cfg.threads);

  if (kv.has("model.layers")) {
    cfg.model.layer_dims.clear();
    for (const auto& s : kv.get_list("model.layers", {})) {
      cfg.model.layer_dims.push_back(static_cast<std::size_t>(parse_number<std::int64_t>("model.layers", s)));
    }
  }
  cfg.model.activation = parse_activation(kv.get_string("model.activation", to_string(cfg.model.activation)));
  cfg.model.loss = parse_loss_kind(kv.get_string("model.loss", to_string(cfg.model.loss)));

  cfg.data.root = kv.get_string("data.root", cfg.data.root);
  cfg.data.train_subset = get_count(kv, "data.train_subset", cfg.data.train_subset);
  cfg.data.test_subset = get_count(kv, "data.test_subset", cfg.data.test_subset);

  if (kv.has("optimizers")) {
    cfg.optimizers.clear();
    for (const auto& name : kv.get_list("optimizers", {})) {
      OptimizerConfig o;
      o.kind = parse_optimizer_kind(name);
      cfg.optimizers.push_back(o);
    }
  }
  for (auto& o : cfg.optimizers) {
    const std::string specific = "optimizer." + to_string(o.kind) + ".";
    auto lookup = [&](const std::string& field) -> std::optional<std::string> {
      if (auto v = kv.get(specific + field)) return v;
      return kv.get("optimizer." + field);
    };
    auto number = [&](const std::string& field, double fallback) {
      const auto v = lookup(field);
      return v ? parse_number<double>("optimizer." + field, *v) : fallback;
    };
    o.lr_max = number("lr_max", o.lr_max);
    o.weight_decay = number("weight_decay", o.weight_decay);
    o.momentum = number("momentum", o.momentum);
    o.eps = number("eps", o.eps);
    if (lookup("rho")) o.rho = number("rho", o.effective_rho());
    if (auto v = lookup("nesterov")) {
      KeyValueConfig tmp;
      tmp.set("nesterov", *v);
      o.nesterov = tmp.get_bool("nesterov", false);
    }
  }
  for (const auto& key : kv.entries()) {
    const auto& k = key.first;
    if (k.rfind("optimizer.", 0) != 0) continue;
    const std::string rest = k.substr(10);
    const bool generic = std::any_of(std::begin(kOptimizerFields), std::end(kOptimizerFields),
                                     [&](const char* f) { return rest == f; });
    if (generic) continue;
    const auto dot = rest.find('.');
    if (dot == std::string::npos) throw ConfigError("unknown key '" + k + "'");
    parse_optimizer_kind(rest.substr(0, dot));
  }

  cfg.schedule.kind = parse_schedule_kind(kv.get_string("schedule.kind", to_string(cfg.schedule.kind)));
  cfg.schedule.lr_min = kv.get_double("schedule.lr_min", cfg.schedule.lr_min);
  const std::string gran = kv.get_string("schedule.granularity", "step");
  if (gran == "step") {
    cfg.granularity = ScheduleGranularity::step;
  } else if (gran == "epoch") {
    cfg.granularity = ScheduleGranularity::epoch;
  } else {
    throw ConfigError("schedule.granularity must be step or epoch");
  }

  auto& l = cfg.landscape;
  l.direction_mode = parse_direction_mode(kv.get_string("landscape.direction_mode", to_string(l.direction_mode)));
  if (kv.has("landscape.direction_seed")) {
    l.direction_seed = static_cast<std::uint64_t>(kv.get_int("landscape.direction_seed", 0));
  }
  const std::string anchor = kv.get_string("landscape.anchor", l.anchor == AnchorSource::init ? "init" : "trained");
  if (anchor == "init") {
    l.anchor = AnchorSource::init;
  } else if (anchor == "trained") {
    l.anchor = AnchorSource::trained;
  } else {
    throw ConfigError("landscape.anchor must be init or trained");
  }
  const std::string axes = kv.get_string("landscape.axes", l.auto_axes ? "auto" : "fixed");
  if (axes != "auto" && axes != "fixed") throw ConfigError("landscape.axes must be auto or fixed");
  l.auto_axes = axes == "auto";
  l.alpha_min = kv.get_double("landscape.alpha_min", l.alpha_min);
  l.alpha_max = kv.get_double("landscape.alpha_max", l.alpha_max);
  l.beta_min = kv.get_double("landscape.beta_min", l.beta_min);
  l.beta_max = kv.get_double("landscape.beta_max", l.beta_max);
  l.resolution = get_count(kv, "landscape.resolution", l.resolution);
  l.start_alpha = kv.get_double("landscape.start_alpha", l.start_alpha);
  l.start_beta = kv.get_double("landscape.start_beta", l.start_beta);
  l.clip_ceiling = kv.get_double("landscape.clip", l.clip_ceiling);
  l.flatness_radius = kv.get_double("landscape.flatness_radius", l.flatness_radius);
  return cfg;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  for (OptimizerKind k : all_optimizer_kinds()) {
    OptimizerConfig o;
    o.kind = k;
    cfg.optimizers.push_back(o);
  }
  switch (kind) {
    case ExperimentKind::shared_landscape_race:
      break;
    case ExperimentKind::train_history:
      // 20 epochs of 10 batches, perturbed kinds get half.
      cfg.iterations = 200;
      cfg.perturbed_iterations = 100;
      cfg.data.train_subset = 1000;
      cfg.data.test_subset = 1000;
      cfg.sample_stride = 10;
      cfg.model.loss = LossKind::cross_entropy;
      break;
    case ExperimentKind::landscape_3d:
      cfg.iterations = 200;
      cfg.perturbed_iterations = 100;
      cfg.data.train_subset = 1000;
      cfg.data.test_subset = 1000;
      cfg.sample_stride = 10;
      cfg.model.loss = LossKind::cross_entropy;
      cfg.optimizers = {optimizer_of(OptimizerKind::pugd)};
      cfg.landscape.anchor = AnchorSource::trained;
      cfg.landscape.auto_axes = false;
      cfg.landscape.resolution = 21;
      break;
    case ExperimentKind::trajectory_2d:
      cfg.iterations = 200;
      cfg.perturbed_iterations = 100;
      cfg.data.train_subset = 1000;
      cfg.data.test_subset = 1000;
      cfg.sample_stride = 10;
      cfg.model.loss = LossKind::cross_entropy;
      cfg.optimizers = {optimizer_of(OptimizerKind::ugd),
                        optimizer_of(OptimizerKind::pugd)};
      cfg.landscape.anchor = AnchorSource::trained;
      cfg.landscape.direction_mode = DirectionMode::pca;
      cfg.landscape.resolution = 25;
      break;
  }
  return cfg;
}

std::uint64_t stream_seed(std::uint64_t master, RandomStream purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu),
                    static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(purpose)};
  std::uint32_t out[2];
  seq.generate(std::begin(out), std::end(out));
  return (std::uint64_t{out[0]} << 32) | out[1];
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pugd
