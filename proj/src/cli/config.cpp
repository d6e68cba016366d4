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

#include "edgeflow/cli/config.hpp"

#include <cstdlib>
#include <set>

#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::invalid_argument, where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw Error(Errc::invalid_argument, "unknown " + where + " key '" + it.key() + "'");
  }
}

}  // namespace

void to_json(json& j, const NodeConfig& v) {
  j = json{{"cpu_cores", v.cpu_cores}, {"memory_mb", v.memory_mb}};
  if (v.arch) j["arch"] = to_string(*v.arch);
  if (v.speed) j["speed"] = *v.speed;
}

void from_json(const json& j, NodeConfig& v) {
  reject_unknown(j, {"cpu_cores", "memory_mb", "arch", "speed"}, "node config");
  v.cpu_cores = j.value("cpu_cores", 4);
  v.memory_mb = j.value("memory_mb", 8192);
  v.arch.reset();
  v.speed.reset();
  if (j.contains("arch")) v.arch = parse_arch(j.at("arch").get<std::string>());
  if (j.contains("speed")) v.speed = j.at("speed").get<double>();
  if (v.cpu_cores < 1 || v.memory_mb < 1 || (v.speed && *v.speed <= 0)) {
    throw Error(Errc::invalid_argument, "node config needs positive cores, memory and speed");
  }
}

void to_json(json& j, const CliConfig& v) {
  j = json{{"coordinator_url", v.coordinator_url},
           {"data_root", v.data_root.string()},
           {"node_count", v.node_count},
           {"nodes", v.nodes},
           {"modules", v.modules},
           {"port", v.port},
           {"tick_ms", v.tick_ms}};
}

void from_json(const json& j, CliConfig& v) {
  reject_unknown(j, {"coordinator_url", "data_root", "node_count", "nodes", "modules", "port", "tick_ms"}, "config");
  CliConfig d;
  v.coordinator_url = j.value("coordinator_url", d.coordinator_url);
  v.data_root = j.value("data_root", d.data_root.string());
  v.node_count = j.value("node_count", d.node_count);
  v.nodes = j.value("nodes", std::vector<NodeConfig>{});
  if (j.contains("modules")) {
    reject_unknown(j.at("modules"), {"objstore", "registry", "serving", "metrics"}, "modules");
    v.modules = j.at("modules").get<ModuleToggles>();
  } else {
    v.modules = {};
  }
  v.port = j.value("port", d.port);
  v.tick_ms = j.value("tick_ms", d.tick_ms);
  if (v.node_count < 0 || v.tick_ms < 1 || v.port < 0 || v.port > 65535) {
    throw Error(Errc::invalid_argument, "config has an out-of-range node_count, port or tick_ms");
  }
}

CliConfig load_cli_config(const std::optional<std::filesystem::path>& path) {
  std::optional<std::filesystem::path> p = path;
  if (!p) {
    if (const char* env = std::getenv("EDGEFLOW_CONFIG"); env && *env) p = env;
  }
  if (!p) return {};
  if (!std::filesystem::exists(*p)) throw Error(Errc::not_found, "config file " + p->string() + " not found");
  return parse_json(read_file(*p)).get<CliConfig>();
}

NodeInfo local_node(const CliConfig& config, int index) {
  NodeConfig nc = index < static_cast<int>(config.nodes.size()) ? config.nodes[static_cast<std::size_t>(index)]
                                                                 : NodeConfig{};
  NodeInfo n;
  n.node_id = "node-" + std::to_string(index + 1);
  n.arch = nc.arch.value_or(index == 0 ? Arch::x86_64 : Arch::arm64);
  n.cpu_cores = nc.cpu_cores;
  n.memory_mb = nc.memory_mb;
  n.speed = nc.speed.value_or(default_speed(n.arch));
  return n;
}

std::string resolve_coordinator_url(const CliConfig& config) {
  if (!config.coordinator_url.empty()) return config.coordinator_url;
  auto file = config.data_root / "coordinator.json";
  if (!std::filesystem::exists(file)) {
    throw Error(Errc::unavailable, "no running cluster under " + config.data_root.string() +
                                       " (start one with `edgeflow cluster up`)");
  }
  return parse_json(read_file(file)).at("url").get<std::string>();
}

std::string example_workflow_json() {
  return R"({
  "name": "qoe",
  "version": 1,
  "tasks": [
    {
      "name": "extract",
      "kind": "builtin-synthetic",
      "outputs": ["dataset"],
      "params": {"generator": "qoe", "rows": 1029, "seed": 7, "duration_ms": 200, "stage": "data_extraction"}
    },
    {
      "name": "train",
      "kind": "train-distributed",
      "inputs": [{"from_task": "extract", "output": "dataset"}],
      "outputs": ["model"],
      "params": {"samples": 1029, "batch_size": 10, "epochs": 1, "worker_count": 2, "cores_per_worker": 1}
    },
    {
      "name": "deploy",
      "kind": "deploy-model",
      "inputs": [{"from_task": "train", "output": "model"}],
      "params": {"model": "qoe", "min_replicas": 1, "max_replicas": 2, "service_time_ms": 5}
    },
    {
      "name": "report",
      "kind": "builtin-synthetic",
      "depends_on": ["deploy"],
      "outputs": ["summary"],
      "params": {"duration_ms": 50, "output_bytes": 256, "stage": "other"}
    }
  ]
}
)";
}

}  // namespace edgeflow
