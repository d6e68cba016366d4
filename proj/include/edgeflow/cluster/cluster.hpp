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
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "edgeflow/core/serialize.hpp"
#include "edgeflow/core/types.hpp"
#include "edgeflow/error.hpp"

namespace edgeflow {

struct NodeInfo {
  std::string node_id;
  Arch arch = Arch::x86_64;
  int cpu_cores = 4;
  int memory_mb = 8192;
  double speed = 1.0;  // multiplier on per-sample / per-request compute time
  std::string address;  // agent base URL; empty for in-process nodes
  std::int64_t last_heartbeat_ms = 0;
  int allocated_cores = 0;
  int allocated_memory_mb = 0;
  bool live = false;  // filled in by snapshots

  int free_cores() const { return cpu_cores - allocated_cores; }
  int free_memory_mb() const { return memory_mb - allocated_memory_mb; }
};

void to_json(json& j, const NodeInfo& v);
void from_json(const json& j, NodeInfo& v);

// Default speed multiplier by architecture: edge arm64 cores are slower.
double default_speed(Arch arch);

struct Placement {
  std::uint64_t id = 0;
  std::string node_id;
  int cores = 0;
  int memory_mb = 0;

  bool operator==(const Placement&) const = default;
};

void to_json(json& j, const Placement& v);
void from_json(const json& j, Placement& v);

class UnschedulableError : public Error {
 public:
  explicit UnschedulableError(std::string constraint)
      : Error(Errc::unschedulable, "Unschedulable(" + constraint + ")"),
        constraint_(std::move(constraint)) {}

  // "cpu", "memory", "arch" or "nodes" (too few live nodes).
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

struct ClusterOptions {
  std::int64_t liveness_window_ms = 2000;
};

// Node registry plus resource accounting. A node is live iff
// now - last_heartbeat_ms < liveness window. Allocations never exceed
// capacity.
class Cluster {
 public:
  explicit Cluster(ClusterOptions options = {});

  // A dead node may re-register under its old id; a live one may not.
  NodeInfo register_node(NodeInfo info, std::int64_t now_ms);
  NodeInfo heartbeat(const std::string& node_id, std::int64_t now_ms);
  // Node ids that went from live to dead since the previous sweep.
  std::vector<std::string> sweep(std::int64_t now_ms);

  std::vector<NodeInfo> nodes(std::int64_t now_ms) const;
  std::vector<NodeInfo> live_nodes(std::int64_t now_ms) const;
  std::optional<NodeInfo> node(const std::string& node_id, std::int64_t now_ms) const;
  bool is_live(const std::string& node_id, std::int64_t now_ms) const;

  // First-fit over live nodes ordered by (most free cores, node_id).
  // train-distributed tasks with multi_node yield worker_count placements on
  // distinct nodes; otherwise a single co-located placement. Throws
  // UnschedulableError naming the binding constraint.
  std::vector<Placement> place_task(const TaskSpec& task, std::int64_t now_ms);
  Placement place(const ResourceRequest& request, std::int64_t now_ms,
                  const std::set<std::string>& exclude = {});
  void release(const Placement& placement);
  void release(std::span<const Placement> placements);

  const ClusterOptions& options() const { return options_; }

 private:
  bool live_locked(const NodeInfo& n, std::int64_t now_ms) const;
  Placement place_locked(const ResourceRequest& request, std::int64_t now_ms,
                         const std::set<std::string>& exclude);

  ClusterOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, NodeInfo> nodes_;
  std::set<std::string> dead_;  // as of the last sweep
  std::map<std::uint64_t, Placement> placements_;
  std::uint64_t next_placement_ = 1;
};

// Worker layout of a train-distributed task.
struct WorkerLayout {
  int workers = 1;
  int cores_per_worker = 1;
  bool multi_node = false;
};

WorkerLayout worker_layout(const TaskSpec& task);

}  // namespace edgeflow
