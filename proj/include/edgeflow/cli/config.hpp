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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edgeflow/cluster/cluster.hpp"
#include "edgeflow/coordinator/coordinator.hpp"
#include "edgeflow/core/serialize.hpp"

namespace edgeflow {

struct NodeConfig {
  int cpu_cores = 4;
  int memory_mb = 8192;
  std::optional<Arch> arch;      // default: first node x86_64, the rest arm64
  std::optional<double> speed;   // default: per-arch multiplier

  bool operator==(const NodeConfig&) const = default;
};

struct CliConfig {
  std::string coordinator_url;  // empty: read <data_root>/coordinator.json
  std::filesystem::path data_root = ".edgeflow";
  int node_count = 4;
  std::vector<NodeConfig> nodes;  // per-node overrides by index
  ModuleToggles modules;
  int port = 0;
  int tick_ms = 250;

  bool operator==(const CliConfig&) const = default;
};

void to_json(json& j, const NodeConfig& v);
void from_json(const json& j, NodeConfig& v);
void to_json(json& j, const CliConfig& v);
void from_json(const json& j, CliConfig& v);

// Reads `path`, else $EDGEFLOW_CONFIG, else defaults. Unknown keys are
// rejected so typos do not silently fall back to defaults.
CliConfig load_cli_config(const std::optional<std::filesystem::path>& path);

// Fully resolved description of node `index` for local bring-up.
NodeInfo local_node(const CliConfig& config, int index);

// Coordinator URL: the configured one, else the one recorded by a running
// local cluster. Throws Unavailable when neither exists.
std::string resolve_coordinator_url(const CliConfig& config);

// The bundled QoE-shaped example workflow ("qoe"): extract, train, deploy
// and a trailing bookkeeping task, one per reported stage.
std::string example_workflow_json();

}  // namespace edgeflow
