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

#include "edgeflow/bench/experiments.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <latch>
#include <map>
#include <thread>

#include "edgeflow/cluster/local_pool.hpp"
#include "edgeflow/cluster/training.hpp"
#include "edgeflow/error.hpp"
#include "edgeflow/orchestrator/orchestrator.hpp"
#include "edgeflow/util/process.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow::bench {

namespace fs = std::filesystem;

namespace {

constexpr std::int64_t kForever = 365LL * 24 * 3600 * 1000;

fs::path fresh_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  auto dir = fs::temp_directory_path() /
             ("edgeflow-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string str(double v) { return format_double(v); }
std::string str(std::int64_t v) { return std::to_string(v); }
std::string str(int v) { return std::to_string(v); }

}  // namespace

double theoretical_speedup(double l_serial, double l_parallel, int n_from, int n_to) {
  if (l_serial < 0 || l_parallel < 0 || n_from < 1 || n_to < 1 || l_serial + l_parallel <= 0) {
    throw Error(Errc::invalid_argument, "speedup needs non-negative latencies and n >= 1");
  }
  return (l_serial + l_parallel / n_from) / (l_serial + l_parallel / n_to);
}

AmdahlFit fit_amdahl(const std::vector<int>& n, const std::vector<double>& latency_ms) {
  if (n.size() != latency_ms.size() || n.size() < 2) {
    throw Error(Errc::invalid_argument, "fit needs at least two (n, latency) points");
  }
  double k = static_cast<double>(n.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    double x = 1.0 / n[i];
    sx += x;
    sy += latency_ms[i];
    sxx += x * x;
    sxy += x * latency_ms[i];
  }
  double denom = k * sxx - sx * sx;
  if (denom == 0) throw Error(Errc::invalid_argument, "fit needs at least two distinct n");
  AmdahlFit fit;
  fit.l_parallel = (k * sxy - sx * sy) / denom;
  fit.l_serial = (sy - fit.l_parallel * sx) / k;
  for (std::size_t i = 0; i < n.size(); ++i) {
    double model = fit.l_serial + fit.l_parallel / n[i];
    fit.max_rel_residual = std::max(fit.max_rel_residual, std::abs(model - latency_ms[i]) / latency_ms[i]);
  }
  return fit;
}

double predicted_burst_latency(int concurrency, int replicas, double service_ms) {
  double rounds = 0;
  for (int i = 1; i <= concurrency; ++i) rounds += (i + replicas - 1) / replicas;
  return service_ms * rounds / concurrency;
}

struct ServingHarness::State {
  fs::path dir;
  std::unique_ptr<ObjectStore> store;
  std::unique_ptr<Registry> registry;
  std::unique_ptr<Cluster> cluster;
  std::unique_ptr<ServingPlane> plane;
  std::string model = "bench-model";
};

ServingHarness::ServingHarness(int replicas, double service_ms, int nodes) : state_(std::make_unique<State>()) {
  auto& s = *state_;
  s.dir = fresh_temp_dir("serving");
  s.store = std::make_unique<ObjectStore>(s.dir / "objects");
  s.registry = std::make_unique<Registry>(*s.store, s.dir / "registry.log");
  s.cluster = std::make_unique<Cluster>(ClusterOptions{kForever});
  int cores = std::max(1, (replicas + nodes - 1) / nodes);
  auto now = now_ms();
  for (int i = 1; i <= nodes; ++i) {
    NodeInfo n;
    n.node_id = "bench-" + std::to_string(i);
    n.cpu_cores = cores;
    n.memory_mb = 1 << 16;
    s.cluster->register_node(n, now);
  }
  s.plane = std::make_unique<ServingPlane>(*s.cluster, *s.registry, *s.store, nullptr,
                                           ServingOptions{s.dir / "scratch"});
  s.registry->register_model(s.model, std::string("synthetic"));
  DeployRequest req;
  req.selector = ModelSelector::latest(s.model);
  req.scaling.min_replicas = replicas;
  req.scaling.max_replicas = replicas;
  req.replica.service_time_ms = service_ms;
  s.plane->deploy(req, now);
}

ServingHarness::~ServingHarness() {
  state_->plane.reset();
  std::error_code ec;
  fs::remove_all(state_->dir, ec);
}

ServingPlane& ServingHarness::plane() { return *state_->plane; }
const std::string& ServingHarness::model() const { return state_->model; }

std::vector<double> ServingHarness::burst(int concurrency) {
  std::vector<double> latency(static_cast<std::size_t>(concurrency), 0.0);
  std::atomic<int> failures{0};
  std::latch go(1);
  std::vector<std::thread> clients;
  clients.reserve(static_cast<std::size_t>(concurrency));
  for (int i = 0; i < concurrency; ++i) {
    clients.emplace_back([&, i] {
      go.wait();
      try {
        latency[static_cast<std::size_t>(i)] = state_->plane->predict(state_->model, "x=" + std::to_string(i)).latency_ms;
      } catch (const Error&) {
        ++failures;
      }
    });
  }
  go.count_down();
  for (auto& t : clients) t.join();
  if (failures > 0) {
    throw Error(Errc::replica_failure, std::to_string(failures.load()) + " requests failed in burst");
  }
  return latency;
}

SweepReport run_concurrency_sweep(const ConcurrencyOptions& o) {
  SweepReport r;
  r.experiment = "concurrency";
  r.var_names = {"replicas", "concurrency"};
  r.measure = "mean_latency_ms";
  r.extra_names = {"model_ms"};
  r.config = {{"replicas", str(o.replicas)}, {"service_ms", str(o.service_ms)}, {"repeats", str(o.repeats)}};

  ServingHarness harness(o.replicas, o.service_ms);
  harness.burst(std::min(o.replicas, 4));  // warm-up
  for (int rep = 1; rep <= o.repeats; ++rep) {
    for (int level : o.levels) {
      RawRow raw{{str(o.replicas), str(level)}, rep, 0.0, false};
      try {
        auto lat = harness.burst(level);
        raw.value = mean_std(lat).mean;
      } catch (const Error&) {
        raw.failed = true;
      }
      r.raw.push_back(raw);
    }
  }
  aggregate(r);
  for (auto& row : r.rows) {
    row.extras[0] = predicted_burst_latency(std::stoi(row.vars[1]), o.replicas, o.service_ms);
  }
  return r;
}

SweepReport run_batch_sweep(const BatchSweepOptions& o) {
  SweepReport r;
  r.experiment = "batch_sweep";
  r.var_names = {"batch_size", "scenario"};
  r.measure = "train_ms";
  r.extra_names = {"predicted_ms"};
  r.config = {{"samples", str(o.samples)},
              {"compute_ms_per_sample", str(o.compute_ms_per_sample)},
              {"sync_ms", str(o.sync_ms)},
              {"repeats", str(o.repeats)},
              {"nodes", str(o.nodes)},
              {"cores_per_node", str(o.cores_per_node)}};

  auto dir = fresh_temp_dir("batch");
  {
    ObjectStore store(dir / "objects");
    Cluster cluster(ClusterOptions{kForever});
    MetricStore metrics;
    LocalNodePool pool(cluster, store, RunnerOptions{dir / "scratch", "", "", false});
    auto now = now_ms();
    for (int i = 1; i <= o.nodes; ++i) {
      NodeInfo n;
      n.node_id = "node-" + std::to_string(i);
      n.cpu_cores = o.cores_per_node;
      n.memory_mb = 1 << 16;
      pool.add_node(n, now);
    }
    Orchestrator orch(cluster, store, metrics, pool);

    auto spec_for = [&](std::int64_t b, const Scenario& sc) {
      TaskSpec t;
      t.name = "train";
      t.kind = TaskKind::train_distributed;
      t.outputs = {"model"};
      t.params = {{"samples", str(o.samples)},
                  {"batch_size", str(b)},
                  {"worker_count", str(sc.workers)},
                  {"cores_per_worker", str(sc.cores_per_worker)},
                  {"multi_node", sc.multi_node ? "true" : "false"},
                  {"compute_ms_per_sample", str(o.compute_ms_per_sample)},
                  {"sync_ms", str(o.sync_ms)},
                  {"cache", "false"}};
      t.resources.memory_mb = 128;
      WorkflowSpec w;
      w.name = "batch-" + sc.name + "-b" + str(b);
      w.tasks = {t};
      return w;
    };

    std::map<std::string, bool> schedulable;
    for (const auto& sc : o.scenarios) {
      try {
        auto probe = spec_for(o.batch_sizes.front(), sc).tasks.front();
        auto placements = cluster.place_task(probe, now_ms());
        cluster.release(placements);
        schedulable[sc.name] = true;
      } catch (const UnschedulableError& e) {
        schedulable[sc.name] = false;
        r.notes.push_back("scenario " + sc.name + " skipped: " + e.what());
      }
      for (auto b : o.batch_sizes) orch.register_workflow(spec_for(b, sc), now_ms());
    }

    for (int rep = 1; rep <= o.repeats; ++rep) {
      for (auto b : o.batch_sizes) {
        for (const auto& sc : o.scenarios) {
          RawRow raw{{str(b), sc.name}, rep, 0.0, true};
          if (schedulable[sc.name]) {
            auto rec = orch.submit_run({spec_for(b, sc).name, 1}, {}, now_ms());
            std::optional<RunRecord> done;
            while (true) {
              orch.tick(now_ms());
              done = orch.run(rec.run_id);
              if (done->terminal()) break;
              orch.wait_for_work(std::chrono::milliseconds(20));
            }
            if (done->state == RunState::succeeded) {
              raw.value = done->task_metrics.at("train").at("train_ms");
              raw.failed = false;
            }
          }
          r.raw.push_back(raw);
        }
      }
    }
    aggregate(r);
    for (auto& row : r.rows) {
      TrainingPlan plan;
      plan.samples = o.samples;
      plan.batch_size = std::stoll(row.vars[0]);
      const auto& sc = *std::find_if(o.scenarios.begin(), o.scenarios.end(),
                                     [&](const Scenario& s) { return s.name == row.vars[1]; });
      plan.workers = sc.workers;
      plan.cores_per_worker = sc.cores_per_worker;
      plan.multi_node = sc.multi_node;
      plan.compute_ms_per_sample = o.compute_ms_per_sample;
      plan.sync_ms = o.sync_ms;
      row.extras[0] = simulate_training_time(plan);
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return r;
}

SweepReport run_scale_study(const ScaleStudyOptions& o) {
  SweepReport r;
  r.experiment = "scale_study";
  r.var_names = {"replicas"};
  r.measure = "speedup";
  r.extra_names = {"mean_latency_ms", "ideal_speedup", "model_speedup", "marginal"};
  r.config = {{"concurrency", str(o.concurrency)},
              {"service_ms", str(o.service_ms)},
              {"repeats", str(o.repeats)},
              {"marginal_threshold", str(o.marginal_threshold)}};

  std::map<int, std::vector<double>> latencies;
  for (int rep = 1; rep <= o.repeats; ++rep) {
    std::optional<double> baseline;
    for (int replicas : o.replicas) {
      RawRow raw{{str(replicas)}, rep, 0.0, false};
      try {
        ServingHarness h(replicas, o.service_ms, 4);
        h.burst(std::min(replicas, 4));
        double mean = mean_std(h.burst(o.concurrency)).mean;
        latencies[replicas].push_back(mean);
        if (!baseline) baseline = mean;  // first entry is the 1-replica baseline
        raw.value = *baseline / mean;
      } catch (const Error&) {
        raw.failed = true;
      }
      r.raw.push_back(raw);
    }
  }
  aggregate(r);
  const double base_model = predicted_burst_latency(o.concurrency, o.replicas.front(), o.service_ms);
  const SweepRow* prev = nullptr;
  for (auto& row : r.rows) {
    int replicas = std::stoi(row.vars[0]);
    auto& lat = latencies[replicas];
    row.extras[0] = lat.empty() ? std::nan("") : mean_std(lat).mean;
    row.extras[1] = static_cast<double>(replicas) / o.replicas.front();
    row.extras[2] = base_model / predicted_burst_latency(o.concurrency, replicas, o.service_ms);
    double marginal = 0.0;
    if (prev && !prev->failed && !row.failed) {
      marginal = (row.stat.mean - prev->stat.mean) / prev->stat.mean < o.marginal_threshold ? 1.0 : 0.0;
    }
    row.extras[3] = marginal;
    prev = &row;
  }
  r.notes.push_back("marginal=1 marks a speedup gain below " + str(o.marginal_threshold * 100) +
                    "% over the previous replica count");
  return r;
}

SweepReport run_deployment_timing(const DeployTimingOptions& o) {
  SweepReport r;
  r.experiment = "deploy_time";
  r.var_names = {"nodes"};
  r.measure = "bringup_ms";
  r.config = {{"repeats", str(o.repeats)},
              {"nodes", str(o.nodes)},
              {"node_startup_delay_ms", str(o.node_startup_delay_ms)}};
  int failed = 0;
  for (int rep = 1; rep <= o.repeats; ++rep) {
    auto root = o.work_root / ("deploy-" + std::to_string(rep));
    std::error_code ec;
    fs::remove_all(root, ec);
    RawRow raw{{str(o.nodes)}, rep, 0.0, true};
    SpawnOptions so;
    so.stdout_file = o.work_root / ("deploy-" + std::to_string(rep) + ".log");
    std::vector<std::string> up = {o.cli.string(), "cluster", "up", "--nodes", str(o.nodes),
                                   "--data-root", root.string(), "--node-startup-delay-ms",
                                   str(o.node_startup_delay_ms)};
    fs::create_directories(o.work_root);
    double t0 = steady_ms();
    auto res = run_process(up, so, std::chrono::milliseconds(o.timeout_ms));
    double elapsed = steady_ms() - t0;
    if (res.exit_code == 0 && !res.timed_out) {
      raw.value = elapsed;
      raw.failed = false;
    } else {
      ++failed;
    }
    run_process({o.cli.string(), "cluster", "down", "--data-root", root.string()}, so,
                std::chrono::milliseconds(20'000));
    fs::remove_all(root, ec);
    r.raw.push_back(raw);
  }
  aggregate(r);
  if (failed > 0) r.notes.push_back(std::to_string(failed) + " bring-up(s) failed and were excluded");
  return r;
}

SweepReport stage_timing_report(const std::vector<RunRecord>& runs) {
  SweepReport r;
  r.experiment = "stage_timing";
  r.var_names = {"stage"};
  r.measure = "duration_ms";
  r.config = {{"runs", str(static_cast<int>(runs.size()))}};
  int rep = 0;
  for (const auto& run : runs) {
    ++rep;
    std::map<StageKind, double> total;
    for (auto kind : {StageKind::data_extraction, StageKind::model_training, StageKind::model_deployment,
                      StageKind::other}) {
      total[kind] = 0.0;
    }
    for (const auto& st : run.stage_timings) total[st.stage] += static_cast<double>(st.end_ms - st.start_ms);
    for (const auto& [kind, ms] : total) {
      r.raw.push_back({{to_string(kind)}, rep, ms, run.state != RunState::succeeded});
    }
  }
  aggregate(r);
  r.notes.push_back("other covers queueing, dispatch, process spawn and scratch setup; "
                    "this is the local counterpart of container creation overhead");
  return r;
}

}  // namespace edgeflow::bench
