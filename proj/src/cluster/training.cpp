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

#include "edgeflow/cluster/training.hpp"

#include <barrier>
#include <chrono>
#include <thread>
#include <vector>

#include "edgeflow/cluster/cluster.hpp"
#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

namespace {

std::int64_t int_param(const TaskSpec& task, const std::string& key, std::int64_t fallback) {
  auto s = task.param(key, std::to_string(fallback));
  try {
    std::size_t pos = 0;
    auto v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw Error(Errc::invalid_argument, "param " + key + " must be an integer, got '" + s + "'");
  }
}

double double_param(const TaskSpec& task, const std::string& key, double fallback) {
  auto s = task.param(key, format_double(fallback));
  try {
    std::size_t pos = 0;
    auto v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw Error(Errc::invalid_argument, "param " + key + " must be a number, got '" + s + "'");
  }
}

void sleep_ms(double ms) {
  if (ms > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

}  // namespace

TrainingPlan training_plan(const TaskSpec& task) {
  TrainingPlan p;
  p.samples = int_param(task, "samples", p.samples);
  p.batch_size = int_param(task, "batch_size", p.batch_size);
  p.workers = static_cast<int>(int_param(task, "worker_count", p.workers));
  p.cores_per_worker = static_cast<int>(int_param(task, "cores_per_worker", p.cores_per_worker));
  p.multi_node = worker_layout(task).multi_node;
  p.compute_ms_per_sample = double_param(task, "compute_ms_per_sample", p.compute_ms_per_sample);
  p.sync_ms = double_param(task, "sync_ms", p.sync_ms);
  p.epochs = static_cast<int>(int_param(task, "epochs", p.epochs));
  if (p.samples < 1 || p.batch_size < 1 || p.workers < 1 || p.cores_per_worker < 1 ||
      p.epochs < 1 || p.compute_ms_per_sample < 0 || p.sync_ms < 0) {
    throw Error(Errc::invalid_argument, "training plan values out of range");
  }
  return p;
}

double simulate_training_time(const TrainingPlan& plan, double speed) {
  double per_step = plan.step_compute_ms() * speed + (plan.syncs() ? plan.sync_ms : 0.0);
  return static_cast<double>(plan.steps()) * per_step;
}

double run_synthetic_training(const TrainingPlan& plan, double speed) {
  const double compute = plan.step_compute_ms() * speed;
  const double sync = plan.syncs() ? plan.sync_ms : 0.0;
  const std::int64_t steps = plan.steps();

  auto on_step = [sync]() noexcept { sleep_ms(sync); };
  std::barrier barrier(plan.workers, on_step);

  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::thread> workers;
  workers.reserve(plan.workers);
  for (int w = 0; w < plan.workers; ++w) {
    workers.emplace_back([&] {
      for (std::int64_t s = 0; s < steps; ++s) {
        sleep_ms(compute);
        barrier.arrive_and_wait();
      }
    });
  }
  for (auto& t : workers) t.join();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace edgeflow
