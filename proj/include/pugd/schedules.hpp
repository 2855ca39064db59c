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
#include <string>

namespace pugd {

enum class ScheduleKind { constant, cosine_annealing };

std::string to_string(ScheduleKind k);
ScheduleKind parse_schedule_kind(const std::string& s);

/// Learning rate as a function of the step index t in [0, total_steps].
struct Schedule {
  ScheduleKind kind = ScheduleKind::cosine_annealing;
  double lr_max = 0.1;
  double lr_min = 0.0;
  std::size_t total_steps = 1;

  /// Throws ConfigError unless 0 <= lr_min <= lr_max and total_steps >= 1.
  void validate() const;
};

/// constant: lr_max.
/// cosine_annealing: lr_min + (lr_max - lr_min) * (1 + cos(pi * t / T)) / 2,
/// single anneal without restarts. Throws OutOfRange for t > total_steps.
double lr_at(const Schedule& s, std::size_t t);

}  // namespace pugd
