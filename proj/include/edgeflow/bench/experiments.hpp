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
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "edgeflow/bench/report.hpp"
#include "edgeflow/cluster/cluster.hpp"
#include "edgeflow/serving/serving.hpp"

namespace edgeflow::bench {

// S = (Ls + Lp/n_from) / (Ls + Lp/n_to).
double theoretical_speedup(double l_serial, double l_parallel, int n_from, int n_to);

struct AmdahlFit {
  double l_serial = 0.0;
  double l_parallel = 0.0;
  double max_rel_residual = 0.0;
};

// Least-squares fit of latency = Ls + Lp/n.
AmdahlFit fit_amdahl(const std::vector<int>& n, const std::vector<double>& latency_ms);

// Mean latency of `concurrency` simultaneous requests, each served in d ms by
// one of `replicas` least-inflight replicas: d * mean_i ceil(i/replicas).
double predicted_burst_latency(int concurrency, int replicas, double service_ms);

// Self-contained serving stack on simulated nodes, used by the sweeps.
class ServingHarness {
 public:
  // `replicas` one-core replicas of a synthetic model spread over `nodes`
  // homogeneous nodes.
  ServingHarness(int replicas, double service_ms, int nodes = 4);
  ~ServingHarness();

  ServingPlane& plane();
  const std::string& model() const;
  // Issues `concurrency` simultaneous requests; returns per-request
  // latencies in ms. Throws if any request fails.
  std::vector<double> burst(int concurrency);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct ConcurrencyOptions {
  int replicas = 4;
  double service_ms = 40.0;
  std::vector<int> levels = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
  int repeats = 5;
};

// Rows: (replicas, level) -> mean request latency; extra column model_ms.
SweepReport run_concurrency_sweep(const ConcurrencyOptions& options);

struct Scenario {
  std::string name;  // e.g. "4x1": nodes x cores per worker
  int workers = 1;
  int cores_per_worker = 1;
  bool multi_node = false;
};

struct BatchSweepOptions {
  std::int64_t samples = 10'000;
  std::vector<std::int64_t> batch_sizes = {8, 16, 32, 64, 128, 256, 512};
  std::vector<Scenario> scenarios = {
      {"1x4", 1, 4, false},
      {"1x1", 1, 1, false},
      {"4x1", 4, 1, true},
  };
  int repeats = 5;
  double compute_ms_per_sample = 1.0;
  double sync_ms = 12.0;
  int nodes = 4;
  int cores_per_node = 4;
};

// Runs each (B, scenario) cell as a train-distributed task through the
// orchestrator on simulated nodes. Rows: (batch_size, scenario) -> measured
// training ms; extra column predicted_ms.
SweepReport run_batch_sweep(const BatchSweepOptions& options);

struct ScaleStudyOptions {
  std::vector<int> replicas = {1, 2, 4, 8, 12, 16, 20, 24};
  int concurrency = 500;
  double service_ms = 20.0;
  int repeats = 5;
  double marginal_threshold = 0.05;
};

// Rows: replicas -> speedup of mean latency vs one replica; extras
// ideal_speedup, model_speedup, marginal (1 when the gain over the previous
// row is below the threshold).
SweepReport run_scale_study(const ScaleStudyOptions& options);

struct DeployTimingOptions {
  int repeats = 10;
  int nodes = 4;
  std::filesystem::path cli;        // edgeflow executable
  std::filesystem::path work_root;  // fresh data root per repeat below here
  std::int64_t node_startup_delay_ms = 0;
  std::int64_t timeout_ms = 60'000;
};

// Times `cluster up` (coordinator, node agents, all services ready) from a
// clean data root, tearing down between repeats. Failed bring-ups are
// excluded and reported.
SweepReport run_deployment_timing(const DeployTimingOptions& options);

// Per-stage durations summed per run, aggregated over runs.
SweepReport stage_timing_report(const std::vector<RunRecord>& runs);

}  // namespace edgeflow::bench
