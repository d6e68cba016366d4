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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace edgeflow {

using Params = std::map<std::string, std::string>;
using Labels = std::map<std::string, std::string>;

enum class TaskKind { builtin_synthetic, external_process, train_distributed, deploy_model };
enum class Arch { x86_64, arm64, any };
enum class StageKind { data_extraction, model_training, model_deployment, other };
enum class RunState { pending, running, succeeded, failed };
enum class TaskState { pending, running, succeeded, failed };
enum class PredicateOp { eq, ne, lt, gt };

struct WorkflowId {
  std::string name;
  int version = 1;

  auto operator<=>(const WorkflowId&) const = default;
};

struct ResourceRequest {
  int cpu_cores = 1;
  int memory_mb = 256;
  Arch arch = Arch::any;

  bool operator==(const ResourceRequest&) const = default;
};

// Names one input of a task: either an output of an upstream task
// (`from_task` + `output`) or an existing object (`bucket` + `key`).
// `name` is what the task sees the input as; it defaults to the output or
// key name.
struct ArtifactSelector {
  std::string from_task;
  std::string output;
  std::string bucket;
  std::string key;
  std::string name;

  std::string local_name() const;
  bool operator==(const ArtifactSelector&) const = default;
};

struct TaskSpec {
  std::string name;
  TaskKind kind = TaskKind::builtin_synthetic;
  std::vector<std::string> depends_on;
  std::vector<ArtifactSelector> inputs;
  std::vector<std::string> outputs;
  Params params;
  ResourceRequest resources;

  // Explicit depends_on plus upstream tasks referenced by inputs, deduped.
  std::vector<std::string> dependencies() const;
  std::string param(const std::string& key, const std::string& fallback) const;
  bool operator==(const TaskSpec&) const = default;
};

struct MetricSelector {
  std::string name;
  Labels labels;

  bool operator==(const MetricSelector&) const = default;
};

struct TriggerSpec {
  MetricSelector metric_query;
  PredicateOp op = PredicateOp::eq;
  double threshold = 0.0;
  std::string evaluation_cadence = "@every 1s";
  WorkflowId target_workflow;

  bool operator==(const TriggerSpec&) const = default;
};

struct WorkflowSpec {
  std::string name;
  int version = 1;
  std::vector<TaskSpec> tasks;
  std::optional<std::string> schedule;
  std::optional<TriggerSpec> trigger;

  WorkflowId id() const { return {name, version}; }
  const TaskSpec* find_task(const std::string& task) const;
  bool operator==(const WorkflowSpec&) const = default;
};

struct ArtifactRef {
  std::string bucket;
  std::string key;
  std::string digest;
  std::int64_t size_bytes = 0;

  bool operator==(const ArtifactRef&) const = default;
};

struct StageTiming {
  StageKind stage = StageKind::other;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
  std::string task;

  bool operator==(const StageTiming&) const = default;
};

struct RunRecord {
  std::string run_id;
  WorkflowId workflow;
  RunState state = RunState::pending;
  std::map<std::string, TaskState> tasks;
  std::vector<StageTiming> stage_timings;
  std::map<std::string, std::map<std::string, ArtifactRef>> produced;
  std::set<std::string> cache_hits;
  std::map<std::string, int> attempts;
  std::map<std::string, std::string> errors;
  std::map<std::string, std::map<std::string, double>> task_metrics;
  std::int64_t submitted_ms = 0;
  std::int64_t finished_ms = 0;

  bool terminal() const {
    return state == RunState::succeeded || state == RunState::failed;
  }
};

// Maps a task onto the reported workflow stage. A `stage` param overrides
// the kind-derived default.
StageKind stage_for(const TaskSpec& task);

}  // namespace edgeflow
