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

#include <json.hpp>

#include <string>
#include <string_view>

#include "edgeflow/core/types.hpp"

namespace edgeflow {

using json = nlohmann::json;

std::string to_string(TaskKind v);
std::string to_string(Arch v);
std::string to_string(StageKind v);
std::string to_string(RunState v);
std::string to_string(TaskState v);
std::string to_string(PredicateOp v);

TaskKind parse_task_kind(std::string_view s);
Arch parse_arch(std::string_view s);
StageKind parse_stage_kind(std::string_view s);
RunState parse_run_state(std::string_view s);
TaskState parse_task_state(std::string_view s);
PredicateOp parse_predicate_op(std::string_view s);

void to_json(json& j, const WorkflowId& v);
void from_json(const json& j, WorkflowId& v);
void to_json(json& j, const ResourceRequest& v);
void from_json(const json& j, ResourceRequest& v);
void to_json(json& j, const ArtifactSelector& v);
void from_json(const json& j, ArtifactSelector& v);
void to_json(json& j, const TaskSpec& v);
void from_json(const json& j, TaskSpec& v);
void to_json(json& j, const MetricSelector& v);
void from_json(const json& j, MetricSelector& v);
void to_json(json& j, const TriggerSpec& v);
void from_json(const json& j, TriggerSpec& v);
void to_json(json& j, const WorkflowSpec& v);
void from_json(const json& j, WorkflowSpec& v);
void to_json(json& j, const ArtifactRef& v);
void from_json(const json& j, ArtifactRef& v);
void to_json(json& j, const StageTiming& v);
void from_json(const json& j, StageTiming& v);
void to_json(json& j, const RunRecord& v);
void from_json(const json& j, RunRecord& v);

// Parses a workflow document; structural problems raise Errc::invalid_spec.
// Semantic checks are validate_workflow's job.
WorkflowSpec parse_workflow(std::string_view text);

// Parses JSON text, mapping syntax errors onto Errc::parse_error.
json parse_json(std::string_view text);

}  // namespace edgeflow
