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

#include "pugd/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pugd/errors.hpp"

namespace pugd {

std::string to_string(ScheduleKind k) {
  return k == ScheduleKind::constant ? "constant" : "cosine_annealing";
}

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "constant") return ScheduleKind::constant;
  if (s == "cosine_annealing" || s == "cosine") return ScheduleKind::cosine_annealing;
  throw ConfigError("unknown schedule kind '" + s + "'");
}

void Schedule::validate() const {
  if (!(lr_min >= 0.0 && lr_min <= lr_max)) {
    throw ConfigError("schedule needs 0 <= lr_min <= lr_max");
  }
  if (total_steps < 1) throw ConfigError("schedule needs total_steps >= 1");
}

double lr_at(const Schedule& s, std::size_t t) {
  if (t > s.total_steps) {
    throw OutOfRange("step " + std::to_string(t) + " beyond schedule length " +
                     std::to_string(s.total_steps));
  }
  if (s.kind == ScheduleKind::constant) return s.lr_max;
  // Endpoints are returned exactly rather than through cos(0)/cos(pi).
  if (t == 0) return s.lr_max;
  if (t == s.total_steps) return s.lr_min;
  const double phase = std::numbers::pi * static_cast<double>(t) /
                       static_cast<double>(s.total_steps);
  const double lr = s.lr_min + (s.lr_max - s.lr_min) * (1.0 + std::cos(phase)) / 2.0;
  return std::clamp(lr, s.lr_min, s.lr_max);
}

}  // namespace pugd
