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

#include "edgeflow/core/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "edgeflow/core/cadence.hpp"
#include "edgeflow/core/serialize.hpp"
#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

std::string ArtifactSelector::local_name() const {
  if (!name.empty()) return name;
  if (!output.empty()) return output;
  return key;
}

std::vector<std::string> TaskSpec::dependencies() const {
  std::set<std::string> deps(depends_on.begin(), depends_on.end());
  for (const auto& in : inputs) {
    if (!in.from_task.empty()) deps.insert(in.from_task);
  }
  return {deps.begin(), deps.end()};
}

std::string TaskSpec::param(const std::string& key, const std::string& fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

const TaskSpec* WorkflowSpec::find_task(const std::string& task) const {
  for (const auto& t : tasks) {
    if (t.name == task) return &t;
  }
  return nullptr;
}

StageKind stage_for(const TaskSpec& task) {
  if (auto it = task.params.find("stage"); it != task.params.end()) {
    return parse_stage_kind(it->second);
  }
  switch (task.kind) {
    case TaskKind::train_distributed: return StageKind::model_training;
    case TaskKind::deploy_model: return StageKind::model_deployment;
    case TaskKind::builtin_synthetic:
    case TaskKind::external_process: return StageKind::data_extraction;
  }
  return StageKind::other;
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i].message;
  }
  return out.str();
}

namespace {

bool positive_int_param(const TaskSpec& t, const std::string& key) {
  auto it = t.params.find(key);
  if (it == t.params.end()) return false;
  try {
    std::size_t used = 0;
    long v = std::stol(it->second, &used);
    return used == it->second.size() && v >= 1;
  } catch (...) {
    return false;
  }
}

// Returns one cycle (rotated to start at its smallest name) or empty.
std::vector<std::string> find_cycle(const std::map<std::string, std::vector<std::string>>& deps) {
  enum Color { white, grey, black };
  std::map<std::string, Color> color;
  std::vector<std::string> stack;
  std::vector<std::string> cycle;

  std::function<bool(const std::string&)> visit = [&](const std::string& n) {
    color[n] = grey;
    stack.push_back(n);
    auto it = deps.find(n);
    if (it != deps.end()) {
      for (const auto& d : it->second) {
        if (!deps.contains(d)) continue;
        if (color[d] == grey) {
          auto pos = std::find(stack.begin(), stack.end(), d);
          cycle.assign(pos, stack.end());
          return true;
        }
        if (color[d] == white && visit(d)) return true;
      }
    }
    stack.pop_back();
    color[n] = black;
    return false;
  };

  for (const auto& [name, _] : deps) {
    if (color[name] == white && visit(name)) break;
  }
  if (!cycle.empty()) {
    // The stack walks dependency edges (consumer -> producer); report the
    // cycle in execution direction.
    std::reverse(cycle.begin(), cycle.end());
    auto min_it = std::min_element(cycle.begin(), cycle.end());
    std::rotate(cycle.begin(), min_it, cycle.end());
  }
  return cycle;
}

}  // namespace

ValidationReport validate_workflow(const WorkflowSpec& spec) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::string task, std::vector<std::string> names,
                 std::string message) {
    report.violations.push_back({kind, std::move(task), std::move(names), std::move(message)});
  };

  if (!is_identifier(spec.name)) {
    add(ViolationKind::invalid_field, "", {spec.name}, "invalid workflow name '" + spec.name + "'");
  }
  if (spec.version < 1) {
    add(ViolationKind::invalid_field, "", {}, "version must be a positive integer");
  }
  if (spec.schedule && !Cadence::parse(*spec.schedule)) {
    add(ViolationKind::invalid_field, "", {*spec.schedule}, "unparseable schedule '" + *spec.schedule + "'");
  }
  if (spec.trigger) {
    if (!Cadence::parse(spec.trigger->evaluation_cadence)) {
      add(ViolationKind::invalid_field, "", {}, "unparseable trigger cadence");
    }
    if (!std::isfinite(spec.trigger->threshold)) {
      add(ViolationKind::invalid_field, "", {}, "trigger threshold must be finite");
    }
  }

  std::set<std::string> names;
  for (const auto& t : spec.tasks) {
    if (!names.insert(t.name).second) {
      add(ViolationKind::duplicate_task_name, t.name, {t.name}, "DuplicateTaskName(" + t.name + ")");
    }
    if (!is_identifier(t.name)) {
      add(ViolationKind::invalid_field, t.name, {t.name}, "invalid task name '" + t.name + "'");
    }
    std::set<std::string> outs;
    for (const auto& o : t.outputs) {
      if (!outs.insert(o).second) {
        add(ViolationKind::invalid_field, t.name, {o}, "duplicate output '" + o + "' in task " + t.name);
      }
      if (!is_identifier(o, 64)) {
        add(ViolationKind::invalid_field, t.name, {o}, "invalid output name '" + o + "'");
      }
    }
    if (t.resources.cpu_cores < 1 || t.resources.memory_mb < 1) {
      add(ViolationKind::invalid_field, t.name, {}, "resources must be positive in task " + t.name);
    }
    if (t.kind == TaskKind::train_distributed) {
      for (const char* key : {"worker_count", "cores_per_worker"}) {
        if (!positive_int_param(t, key)) {
          add(ViolationKind::invalid_field, t.name, {key},
              std::string(key) + " must be an integer >= 1 in task " + t.name);
        }
      }
    }
    if (t.kind == TaskKind::external_process && t.param("command", "").empty()) {
      add(ViolationKind::invalid_field, t.name, {"command"}, "external-process task " + t.name + " needs a command");
    }
    for (const auto& in : t.inputs) {
      bool from_task = !in.from_task.empty();
      bool from_object = !in.bucket.empty() || !in.key.empty();
      if (from_task == from_object || (from_task && in.output.empty()) ||
          (from_object && (in.bucket.empty() || in.key.empty()))) {
        add(ViolationKind::invalid_field, t.name, {}, "malformed input selector in task " + t.name);
      }
    }
    if (auto it = t.params.find("stage"); it != t.params.end()) {
      try {
        parse_stage_kind(it->second);
      } catch (const Error&) {
        add(ViolationKind::invalid_field, t.name, {it->second}, "unknown stage '" + it->second + "'");
      }
    }
  }

  std::map<std::string, std::vector<std::string>> deps;
  for (const auto& t : spec.tasks) {
    auto& d = deps[t.name];
    for (const auto& dep : t.dependencies()) {
      if (!names.contains(dep)) {
        add(ViolationKind::unknown_dependency, t.name, {dep}, "UnknownDependency(" + dep + ")");
        continue;
      }
      d.push_back(dep);
    }
    for (const auto& in : t.inputs) {
      if (in.from_task.empty() || !names.contains(in.from_task)) continue;
      const TaskSpec* up = spec.find_task(in.from_task);
      if (std::find(up->outputs.begin(), up->outputs.end(), in.output) == up->outputs.end()) {
        add(ViolationKind::invalid_field, t.name, {in.output},
            "task " + in.from_task + " declares no output '" + in.output + "'");
      }
    }
  }

  auto cycle = find_cycle(deps);
  if (!cycle.empty()) {
    std::string msg = "CyclicDag(";
    for (std::size_t i = 0; i < cycle.size(); ++i) msg += (i ? "," : "") + cycle[i];
    add(ViolationKind::cyclic_dag, "", cycle, msg + ")");
  }
  return report;
}

const WorkflowSpec& require_valid(const WorkflowSpec& spec) {
  auto report = validate_workflow(spec);
  if (!report.ok()) throw Error(Errc::invalid_spec, report.summary());
  return spec;
}

std::vector<std::string> topo_order(const WorkflowSpec& spec) {
  std::map<std::string, int> pending;
  std::map<std::string, std::vector<std::string>> consumers;
  for (const auto& t : spec.tasks) {
    auto deps = t.dependencies();
    pending[t.name] = static_cast<int>(deps.size());
    for (const auto& d : deps) consumers[d].push_back(t.name);
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto& [name, n] : pending) {
    if (n == 0) ready.push(name);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    auto n = ready.top();
    ready.pop();
    order.push_back(n);
    for (const auto& c : consumers[n]) {
      if (--pending[c] == 0) ready.push(c);
    }
  }
  return order;
}

std::string cache_key(const TaskSpec& task, std::span<const ArtifactRef> resolved_inputs) {
  std::vector<std::string> digests;
  digests.reserve(resolved_inputs.size());
  for (const auto& in : resolved_inputs) digests.push_back(in.digest);
  std::sort(digests.begin(), digests.end());

  Sha256 h;
  h.field("edgeflow-cache-v1");
  h.field(task.name);
  h.field(to_string(task.kind));
  h.field(std::to_string(task.params.size()));
  for (const auto& [k, v] : task.params) {  // std::map iterates sorted
    h.field(k);
    h.field(v);
  }
  h.field(std::to_string(digests.size()));
  for (const auto& d : digests) h.field(d);
  return h.hex();
}

}  // namespace edgeflow
