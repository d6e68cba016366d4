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

#include "edgeflow/core/serialize.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

namespace {

template <typename E, std::size_t N>
std::string enum_name(E v, const std::array<std::pair<E, const char*>, N>& table) {
  for (const auto& [e, name] : table) {
    if (e == v) return name;
  }
  return "unknown";
}

template <typename E, std::size_t N>
E enum_parse(std::string_view s, const std::array<std::pair<E, const char*>, N>& table,
             const char* what) {
  for (const auto& [e, name] : table) {
    if (s == name) return e;
  }
  throw Error(Errc::invalid_spec,
              std::string("unknown ") + what + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<TaskKind, const char*>, 4> kTaskKinds{{
    {TaskKind::builtin_synthetic, "builtin-synthetic"},
    {TaskKind::external_process, "external-process"},
    {TaskKind::train_distributed, "train-distributed"},
    {TaskKind::deploy_model, "deploy-model"},
}};
constexpr std::array<std::pair<Arch, const char*>, 3> kArchs{{
    {Arch::x86_64, "x86_64"},
    {Arch::arm64, "arm64"},
    {Arch::any, "any"},
}};
constexpr std::array<std::pair<StageKind, const char*>, 4> kStages{{
    {StageKind::data_extraction, "data_extraction"},
    {StageKind::model_training, "model_training"},
    {StageKind::model_deployment, "model_deployment"},
    {StageKind::other, "other"},
}};
constexpr std::array<std::pair<RunState, const char*>, 4> kRunStates{{
    {RunState::pending, "pending"},
    {RunState::running, "running"},
    {RunState::succeeded, "succeeded"},
    {RunState::failed, "failed"},
}};
constexpr std::array<std::pair<TaskState, const char*>, 4> kTaskStates{{
    {TaskState::pending, "pending"},
    {TaskState::running, "running"},
    {TaskState::succeeded, "succeeded"},
    {TaskState::failed, "failed"},
}};
constexpr std::array<std::pair<PredicateOp, const char*>, 4> kOps{{
    {PredicateOp::eq, "eq"},
    {PredicateOp::ne, "ne"},
    {PredicateOp::lt, "lt"},
    {PredicateOp::gt, "gt"},
}};

// Params accept numbers and booleans for convenience; they are stored as
// strings.
std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_double(v.get<double>());
  throw Error(Errc::invalid_spec, "param values must be scalars");
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(Errc::invalid_spec, std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

}  // namespace

std::string to_string(TaskKind v) { return enum_name(v, kTaskKinds); }
std::string to_string(Arch v) { return enum_name(v, kArchs); }
std::string to_string(StageKind v) { return enum_name(v, kStages); }
std::string to_string(RunState v) { return enum_name(v, kRunStates); }
std::string to_string(TaskState v) { return enum_name(v, kTaskStates); }
std::string to_string(PredicateOp v) { return enum_name(v, kOps); }

TaskKind parse_task_kind(std::string_view s) { return enum_parse(s, kTaskKinds, "task kind"); }
Arch parse_arch(std::string_view s) { return enum_parse(s, kArchs, "arch"); }
StageKind parse_stage_kind(std::string_view s) { return enum_parse(s, kStages, "stage"); }
RunState parse_run_state(std::string_view s) { return enum_parse(s, kRunStates, "run state"); }
TaskState parse_task_state(std::string_view s) { return enum_parse(s, kTaskStates, "task state"); }
PredicateOp parse_predicate_op(std::string_view s) { return enum_parse(s, kOps, "predicate"); }

void to_json(json& j, const WorkflowId& v) {
  j = json{{"name", v.name}, {"version", v.version}};
}

void from_json(const json& j, WorkflowId& v) {
  v.name = require(j, "name").get<std::string>();
  v.version = j.value("version", 1);
}

void to_json(json& j, const ResourceRequest& v) {
  j = json{{"cpu_cores", v.cpu_cores}, {"memory_mb", v.memory_mb}, {"arch", to_string(v.arch)}};
}

void from_json(const json& j, ResourceRequest& v) {
  v.cpu_cores = j.value("cpu_cores", 1);
  v.memory_mb = j.value("memory_mb", 256);
  v.arch = parse_arch(j.value("arch", std::string("any")));
}

void to_json(json& j, const ArtifactSelector& v) {
  j = json::object();
  if (!v.from_task.empty()) j["from_task"] = v.from_task;
  if (!v.output.empty()) j["output"] = v.output;
  if (!v.bucket.empty()) j["bucket"] = v.bucket;
  if (!v.key.empty()) j["key"] = v.key;
  if (!v.name.empty()) j["name"] = v.name;
}

void from_json(const json& j, ArtifactSelector& v) {
  if (!j.is_object()) throw Error(Errc::invalid_spec, "input selector must be an object");
  v.from_task = j.value("from_task", std::string());
  v.output = j.value("output", std::string());
  v.bucket = j.value("bucket", std::string());
  v.key = j.value("key", std::string());
  v.name = j.value("name", std::string());
}

void to_json(json& j, const TaskSpec& v) {
  j = json{{"name", v.name},
           {"kind", to_string(v.kind)},
           {"depends_on", v.depends_on},
           {"inputs", v.inputs},
           {"outputs", v.outputs},
           {"params", v.params},
           {"resources", v.resources}};
}

void from_json(const json& j, TaskSpec& v) {
  v.name = require(j, "name").get<std::string>();
  v.kind = parse_task_kind(require(j, "kind").get<std::string>());
  v.depends_on = j.value("depends_on", std::vector<std::string>{});
  v.inputs = j.value("inputs", std::vector<ArtifactSelector>{});
  v.outputs = j.value("outputs", std::vector<std::string>{});
  v.params.clear();
  if (j.contains("params")) {
    const auto& p = j.at("params");
    if (!p.is_object()) throw Error(Errc::invalid_spec, "params must be an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
      v.params[it.key()] = scalar_to_string(it.value());
    }
  }
  v.resources = j.value("resources", ResourceRequest{});
}

void to_json(json& j, const MetricSelector& v) {
  j = json{{"name", v.name}, {"labels", v.labels}};
}

void from_json(const json& j, MetricSelector& v) {
  v.name = require(j, "name").get<std::string>();
  v.labels = j.value("labels", Labels{});
}

void to_json(json& j, const TriggerSpec& v) {
  j = json{{"metric_query", v.metric_query},
           {"predicate", {{"op", to_string(v.op)}, {"threshold", v.threshold}}},
           {"evaluation_cadence", v.evaluation_cadence},
           {"target_workflow", v.target_workflow}};
}

void from_json(const json& j, TriggerSpec& v) {
  v.metric_query = require(j, "metric_query").get<MetricSelector>();
  const auto& pred = require(j, "predicate");
  v.op = parse_predicate_op(require(pred, "op").get<std::string>());
  v.threshold = require(pred, "threshold").get<double>();
  v.evaluation_cadence = j.value("evaluation_cadence", std::string("@every 1s"));
  if (j.contains("target_workflow")) {
    v.target_workflow = j.at("target_workflow").get<WorkflowId>();
  } else {
    v.target_workflow = {};
  }
}

void to_json(json& j, const WorkflowSpec& v) {
  j = json{{"name", v.name}, {"version", v.version}, {"tasks", v.tasks}};
  if (v.schedule) j["schedule"] = *v.schedule;
  if (v.trigger) j["trigger"] = *v.trigger;
}

void from_json(const json& j, WorkflowSpec& v) {
  v.name = require(j, "name").get<std::string>();
  const auto& ver = require(j, "version");
  if (!ver.is_number_integer()) throw Error(Errc::invalid_spec, "version must be an integer");
  v.version = ver.get<int>();
  v.tasks = require(j, "tasks").get<std::vector<TaskSpec>>();
  v.schedule.reset();
  v.trigger.reset();
  if (j.contains("schedule") && !j.at("schedule").is_null()) {
    v.schedule = j.at("schedule").get<std::string>();
  }
  if (j.contains("trigger") && !j.at("trigger").is_null()) {
    v.trigger = j.at("trigger").get<TriggerSpec>();
  }
}

void to_json(json& j, const ArtifactRef& v) {
  j = json{{"bucket", v.bucket}, {"key", v.key}, {"digest", v.digest}, {"size_bytes", v.size_bytes}};
}

void from_json(const json& j, ArtifactRef& v) {
  v.bucket = require(j, "bucket").get<std::string>();
  v.key = require(j, "key").get<std::string>();
  v.digest = require(j, "digest").get<std::string>();
  v.size_bytes = require(j, "size_bytes").get<std::int64_t>();
}

void to_json(json& j, const StageTiming& v) {
  j = json{{"stage", to_string(v.stage)}, {"start_ms", v.start_ms}, {"end_ms", v.end_ms}, {"task", v.task}};
}

void from_json(const json& j, StageTiming& v) {
  v.stage = parse_stage_kind(require(j, "stage").get<std::string>());
  v.start_ms = require(j, "start_ms").get<std::int64_t>();
  v.end_ms = require(j, "end_ms").get<std::int64_t>();
  v.task = j.value("task", std::string());
}

void to_json(json& j, const RunRecord& v) {
  json tasks = json::object();
  for (const auto& [name, state] : v.tasks) tasks[name] = to_string(state);
  j = json{{"run_id", v.run_id},
           {"workflow", v.workflow},
           {"state", to_string(v.state)},
           {"tasks", tasks},
           {"stage_timings", v.stage_timings},
           {"produced", v.produced},
           {"cache_hits", v.cache_hits},
           {"attempts", v.attempts},
           {"errors", v.errors},
           {"task_metrics", v.task_metrics},
           {"submitted_ms", v.submitted_ms},
           {"finished_ms", v.finished_ms}};
}

void from_json(const json& j, RunRecord& v) {
  v.run_id = require(j, "run_id").get<std::string>();
  v.workflow = require(j, "workflow").get<WorkflowId>();
  v.state = parse_run_state(require(j, "state").get<std::string>());
  v.tasks.clear();
  const json tasks = j.value("tasks", json::object());
  for (const auto& [name, state] : tasks.items()) {
    v.tasks[name] = parse_task_state(state.get<std::string>());
  }
  v.stage_timings = j.value("stage_timings", std::vector<StageTiming>{});
  v.produced = j.value("produced", decltype(v.produced){});
  v.cache_hits = j.value("cache_hits", std::set<std::string>{});
  v.attempts = j.value("attempts", std::map<std::string, int>{});
  v.errors = j.value("errors", std::map<std::string, std::string>{});
  v.task_metrics = j.value("task_metrics", decltype(v.task_metrics){});
  v.submitted_ms = j.value("submitted_ms", std::int64_t{0});
  v.finished_ms = j.value("finished_ms", std::int64_t{0});
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("invalid JSON: ") + e.what());
  }
}

WorkflowSpec parse_workflow(std::string_view text) {
  json j = parse_json(text);
  try {
    return j.get<WorkflowSpec>();
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_spec, std::string("malformed workflow: ") + e.what());
  }
}

}  // namespace edgeflow
