// Copyright 2026 The Edgeflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "edgeflow/core/types.hpp"

namespace edgeflow {

struct StatSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample (N-1) standard deviation; 0 when n == 1
  std::size_t n = 0;
};

// Throws Errc::empty_input for an empty span.
StatSummary mean_std(std::span<const double> values);

struct TimedValue {
  std::int64_t ts_ms = 0;
  double value = 0.0;
};

struct StageAverage {
  StageKind stage = StageKind::other;
  std::size_t samples = 0;
  std::optional<double> mean;  // empty: no sample fell inside the stage

  bool empty_stage() const { return !mean.has_value(); }
};

// Mean of the samples inside each stage's half-open [start, end) intervals,
// one entry per stage kind present in `stages`, in StageKind order. A sample
// on a shared boundary belongs to the later stage.
std::vector<StageAverage> stage_average(std::span<const TimedValue> series,
                                        std::span<const StageTiming> stages);

}  // namespace edgeflow
