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

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "edgeflow/cluster/cluster.hpp"
#include "edgeflow/cluster/protocol.hpp"
#include "edgeflow/core/cadence.hpp"
#include "edgeflow/core/serialize.hpp"
#include "edgeflow/core/types.hpp"
#include "edgeflow/metrics/metric_store.hpp"
#include "edgeflow/objstore/object_store.hpp"

namespace edgeflow {

// Per-task parameter overrides; the "*" entry applies to every task and is
// applied first.
using ParamOverrides = std::map<std::string, Params>;

struct ScheduleEntry {
  std::string id;
  WorkflowId workflow;
  std::string cadence;
  std::int64_t next_fire_ms = 0;
  std::int64_t anchor_ms = 0;
  bool enabled = true;
  int fires = 0;
};

struct TriggerEntry {
  std::string id;
  TriggerSpec spec;
  std::int64_t next_eval_ms = 0;
  std::int64_t anchor_ms = 0;
  bool enabled = true;
  int evaluations = 0;
  int fires = 0;
};

void to_json(json& j, const ScheduleEntry& v);
void to_json(json& j, const TriggerEntry& v);

enum class ActionKind {
  dispatched,
  cache_hit,
  succeeded,
  failed,
  retried,
  requeued,  // attempt lost with a dead node
  run_finished,
  schedule_fired,
  trigger_fired,
  warning,
};

std::string to_string(ActionKind v);

struct Action {
  ActionKind kind;
  std::string run_id;
  std::string task;
  std::string detail;
};

// Ordered record of dispatches and task completions, for auditing.
struct OrchestratorEvent {
  std::uint64_t seq = 0;
  ActionKind kind;
  std::string run_id;
  std::string task;
  int attempt = 0;
};

struct OrchestratorOptions {
  int retry_limit = 2;  // retries after the first attempt
  std::string coordinator_url;
  // Registered workflows survive restarts when set.
  std::optional<std::filesystem::path> catalog_path;
};

// Runs on the coordinator instead of being dispatched to a node.
using LocalExecutor = std::function<TaskResult(const DispatchRequest&)>;

// Owns run state. tick() is the only mutator; completions from dispatchers
// are queued on an inbox and consumed by the next tick.
class Orchestrator {
 public:
  Orchestrator(Cluster& cluster, BlobStore& store, MetricSource& metrics,
               TaskDispatcher& dispatcher, OrchestratorOptions options = {});
  ~Orchestrator();

  void set_local_executor(TaskKind kind, LocalExecutor executor);

  // Validates and stores the spec; its schedule and trigger, if any, are
  // installed. Re-registering identical content is a no-op.
  void register_workflow(const WorkflowSpec& spec, std::int64_t now_ms);
  std::vector<WorkflowSpec> workflows() const;
  std::optional<WorkflowSpec> workflow(const WorkflowId& id) const;
  // Highest registered version of `name`.
  std::optional<WorkflowSpec> latest_workflow(const std::string& name) const;

  RunRecord submit_run(const WorkflowId& workflow, const ParamOverrides& overrides,
                       std::int64_t now_ms);
  std::optional<RunRecord> run(const std::string& run_id) const;
  std::vector<RunRecord> runs() const;

  ScheduleEntry add_schedule(const WorkflowId& workflow, const std::string& cadence,
                             std::int64_t now_ms);
  TriggerEntry add_trigger(const TriggerSpec& trigger, std::int64_t now_ms);
  std::vector<ScheduleEntry> schedules() const;
  std::vector<TriggerEntry> triggers() const;
  void set_schedule_enabled(const std::string& id, bool enabled);

  // Fired iff the latest matching sample satisfies the predicate; firing
  // submits one run of the target workflow. A missing metric records a
  // warning. Throws Errc::metric_store_unavailable.
  bool evaluate_trigger(const TriggerSpec& trigger, std::int64_t now_ms);

  std::vector<Action> tick(std::int64_t now_ms);

  // Thread-safe; called by dispatchers.
  void deliver(TaskResult result);
  // Blocks until a completion or a new run is waiting, or the timeout passes.
  void wait_for_work(std::chrono::milliseconds timeout);

  std::vector<std::string> warnings() const;
  std::vector<OrchestratorEvent> events() const;
  std::size_t active_runs() const;

 private:
  struct TaskRuntime {
    int attempts = 0;
    std::vector<Placement> placements;
    std::int64_t ready_ms = -1;
    std::int64_t dispatch_ms = 0;
    std::int64_t end_ms = 0;
    std::string cache_key;
    bool unschedulable_warned = false;
  };

  struct RunRuntime {
    RunRecord record;
    WorkflowSpec spec;  // overrides merged
    std::vector<std::string> order;
    std::map<std::string, TaskRuntime> tasks;
  };

  RunRecord submit_locked(const WorkflowId& workflow, const ParamOverrides& overrides,
                          std::int64_t now_ms);
  bool evaluate_locked(const TriggerSpec& trigger, std::int64_t now_ms);
  void warn_locked(std::string message, std::vector<Action>& actions);
  void event_locked(ActionKind kind, const std::string& run, const std::string& task, int attempt);

  void handle_result(TaskResult result, std::int64_t now_ms, std::vector<Action>& actions);
  void handle_dead_nodes(std::int64_t now_ms, std::vector<Action>& actions);
  void fire_schedules(std::int64_t now_ms, std::vector<Action>& actions);
  void fire_triggers(std::int64_t now_ms, std::vector<Action>& actions);
  // Returns true if anything changed.
  bool advance_run(RunRuntime& run, std::int64_t now_ms, std::vector<Action>& actions);
  void fail_attempt(RunRuntime& run, const std::string& task, const std::string& error,
                    std::int64_t now_ms, std::vector<Action>& actions);
  void finish_run(RunRuntime& run, RunState state, std::int64_t now_ms, std::vector<Action>& actions);

  std::optional<std::map<std::string, ArtifactRef>> cache_lookup(const TaskSpec& task,
                                                                  const std::string& key);
  void cache_store(const std::string& key, const TaskResult& result);
  void start_local(LocalExecutor executor, DispatchRequest request);
  void persist_workflow(const WorkflowSpec& spec);

  Cluster& cluster_;
  BlobStore& store_;
  MetricSource& metrics_;
  TaskDispatcher& dispatcher_;
  OrchestratorOptions options_;
  std::map<TaskKind, LocalExecutor> local_executors_;

  mutable std::mutex mu_;
  std::map<WorkflowId, WorkflowSpec> catalog_;
  std::map<std::string, RunRuntime> runs_;
  std::vector<std::string> run_order_;
  std::map<std::string, ScheduleEntry> schedules_;
  std::map<std::string, TriggerEntry> triggers_;
  std::deque<std::string> warnings_;
  std::vector<OrchestratorEvent> events_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t next_run_ = 1;
  std::uint64_t next_entry_ = 1;
  std::string run_prefix_;
  std::ofstream catalog_log_;

  std::mutex inbox_mu_;
  std::condition_variable inbox_cv_;
  std::deque<TaskResult> inbox_;
  bool wake_ = false;  // a run was submitted since the last wait

  std::mutex local_mu_;
  std::vector<std::thread> local_threads_;
};

}  // namespace edgeflow
