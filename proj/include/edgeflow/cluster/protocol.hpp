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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "edgeflow/cluster/cluster.hpp"
#include "edgeflow/core/serialize.hpp"
#include "edgeflow/core/types.hpp"

namespace edgeflow {

struct ResolvedInput {
  std::string name;
  ArtifactRef ref;

  bool operator==(const ResolvedInput&) const = default;
};

// Everything a node needs to run one attempt of a task.
struct DispatchRequest {
  std::string run_id;
  TaskSpec task;
  std::vector<ResolvedInput> inputs;
  int attempt = 1;
  std::vector<Placement> placements;
  std::string cache_key;
  double speed = 1.0;  // slowest placed node's speed multiplier
  std::string coordinator_url;
};

struct TaskResult {
  std::string run_id;
  std::string task;
  int attempt = 0;
  bool ok = false;
  std::map<std::string, ArtifactRef> outputs;
  std::map<std::string, double> metrics;
  std::string error;  // Errc name
  std::string message;
  std::string stderr_tail;
  std::string node_id;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
};

void to_json(json& j, const ResolvedInput& v);
void from_json(const json& j, ResolvedInput& v);
void to_json(json& j, const DispatchRequest& v);
void from_json(const json& j, DispatchRequest& v);
void to_json(json& j, const TaskResult& v);
void from_json(const json& j, TaskResult& v);

using CompletionSink = std::function<void(TaskResult)>;

// Runs task attempts somewhere: in-process threads, or agents over HTTP.
// The sink may be called from any thread, at most once per dispatch.
class TaskDispatcher {
 public:
  virtual ~TaskDispatcher() = default;
  virtual void dispatch(DispatchRequest request, CompletionSink sink) = 0;
};

// External task protocol. The runner writes task_manifest.json, invokes
// `command <manifest path>` with EDGEFLOW_MANIFEST set, and on exit 0 reads
// <output_dir>/outputs.json.
struct ManifestInput {
  std::string name;
  std::string path;
};

struct TaskManifest {
  std::string task_name;
  Params params;
  std::vector<ManifestInput> inputs;
  std::string output_dir;
  std::string coordinator_url;
};

struct OutputEntry {
  std::string name;
  std::string path;
};

struct OutputsManifest {
  std::vector<OutputEntry> outputs;
  std::map<std::string, double> metrics;
};

json manifest_json(const TaskManifest& m);
TaskManifest parse_task_manifest(std::string_view text);

// Strict parser for outputs.json. Any deviation from
// {outputs:[{name,path}], metrics:{string: finite number}} raises
// Errc::protocol_violation.
OutputsManifest parse_outputs_manifest(std::string_view text);
std::string format_outputs_manifest(const OutputsManifest& m);

// Serve mode: a warm process answers requests over stdin/stdout, each
// message a 4-byte big-endian length followed by the payload.
std::string encode_frame(std::string_view payload);
// Consumes one complete frame from the front of `buffer`; returns false if
// the buffer does not yet hold one.
bool decode_frame(std::string& buffer, std::string& payload);

}  // namespace edgeflow
