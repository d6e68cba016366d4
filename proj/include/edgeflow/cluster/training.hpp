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

#include <cstdint>

#include "edgeflow/core/types.hpp"

namespace edgeflow {

struct TrainingPlan {
  std::int64_t samples = 1000;
  std::int64_t batch_size = 16;
  int workers = 1;
  int cores_per_worker = 1;
  bool multi_node = false;
  double compute_ms_per_sample = 1.0;
  double sync_ms = 12.0;  // per-step gradient exchange across nodes
  int epochs = 1;

  std::int64_t steps() const { return (samples + batch_size - 1) / batch_size * epochs; }
  // Compute time of one step on one worker, before the node speed factor.
  double step_compute_ms() const {
    return static_cast<double>(batch_size) * compute_ms_per_sample /
           (static_cast<double>(workers) * cores_per_worker);
  }
  bool syncs() const { return multi_node && workers > 1; }
};

// Reads samples, batch_size, worker_count, cores_per_worker, multi_node,
// compute_ms_per_sample, sync_ms and epochs; throws InvalidArgument on bad
// values.
TrainingPlan training_plan(const TaskSpec& task);

// Closed-form cost model: steps * (B*c/(W*p) + s if the workers sync over
// the network).
double simulate_training_time(const TrainingPlan& plan, double speed = 1.0);

// Runs the plan with one thread per worker meeting at a barrier each step.
// Compute is modelled as the worker holding its cores for the step's
// duration. Returns wall time in ms.
double run_synthetic_training(const TrainingPlan& plan, double speed = 1.0);

}  // namespace edgeflow
