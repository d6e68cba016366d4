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

#include <span>
#include <string>
#include <vector>

#include "edgeflow/core/types.hpp"

namespace edgeflow {

enum class ViolationKind {
  cyclic_dag,
  unknown_dependency,
  duplicate_task_name,
  invalid_field,
};

struct Violation {
  ViolationKind kind;
  std::string task;                // offending task, if any
  std::vector<std::string> names;  // cycle members, or the unknown name
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
  std::string summary() const;
};

// Checks every WorkflowSpec/TaskSpec invariant and reports all violations,
// not just the first.
ValidationReport validate_workflow(const WorkflowSpec& spec);

// Throws Errc::invalid_spec carrying the report summary when invalid.
const WorkflowSpec& require_valid(const WorkflowSpec& spec);

// Dependencies first; among ready tasks, ascending name. Requires a valid spec.
std::vector<std::string> topo_order(const WorkflowSpec& spec);

// Content address of a task execution: name, kind, params sorted by key and
// input digests sorted. Independent of the workflow name and version.
std::string cache_key(const TaskSpec& task, std::span<const ArtifactRef> resolved_inputs);

}  // namespace edgeflow
