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

#include "edgeflow/cluster/cluster.hpp"

#include <algorithm>

namespace edgeflow {

void to_json(json& j, const NodeInfo& v) {
  j = json{{"node_id", v.node_id},
           {"arch", to_string(v.arch)},
           {"cpu_cores", v.cpu_cores},
           {"memory_mb", v.memory_mb},
           {"speed", v.speed},
           {"address", v.address},
           {"last_heartbeat_ms", v.last_heartbeat_ms},
           {"allocated", {{"cores", v.allocated_cores}, {"memory_mb", v.allocated_memory_mb}}},
           {"live", v.live}};
}

void from_json(const json& j, NodeInfo& v) {
  v.node_id = j.at("node_id").get<std::string>();
  v.arch = parse_arch(j.value("arch", std::string("x86_64")));
  v.cpu_cores = j.value("cpu_cores", 4);
  v.memory_mb = j.value("memory_mb", 8192);
  v.speed = j.value("speed", default_speed(v.arch));
  v.address = j.value("address", std::string());
  v.last_heartbeat_ms = j.value("last_heartbeat_ms", std::int64_t{0});
  if (j.contains("allocated")) {
    v.allocated_cores = j.at("allocated").value("cores", 0);
    v.allocated_memory_mb = j.at("allocated").value("memory_mb", 0);
  }
  v.live = j.value("live", false);
}

double default_speed(Arch arch) { return arch == Arch::arm64 ? 1.4 : 1.0; }

void to_json(json& j, const Placement& v) {
  j = json{{"id", v.id}, {"node_id", v.node_id}, {"cores", v.cores}, {"memory_mb", v.memory_mb}};
}

void from_json(const json& j, Placement& v) {
  v.id = j.at("id").get<std::uint64_t>();
  v.node_id = j.at("node_id").get<std::string>();
  v.cores = j.at("cores").get<int>();
  v.memory_mb = j.at("memory_mb").get<int>();
}

WorkerLayout worker_layout(const TaskSpec& task) {
  WorkerLayout l;
  l.workers = std::max(1, std::stoi(task.param("worker_count", "1")));
  l.cores_per_worker = std::max(1, std::stoi(task.param("cores_per_worker", "1")));
  auto multi = task.param("multi_node", l.workers > 1 ? "true" : "false");
  l.multi_node = multi == "true" || multi == "1";
  return l;
}

Cluster::Cluster(ClusterOptions options) : options_(options) {}

bool Cluster::live_locked(const NodeInfo& n, std::int64_t now_ms) const {
  return now_ms - n.last_heartbeat_ms < options_.liveness_window_ms;
}

NodeInfo Cluster::register_node(NodeInfo info, std::int64_t now_ms) {
  if (info.node_id.empty()) throw Error(Errc::invalid_name, "node id required");
  if (info.cpu_cores < 1 || info.memory_mb < 1) {
    throw Error(Errc::invalid_argument, "node capacity must be positive");
  }
  std::lock_guard lock(mu_);
  auto it = nodes_.find(info.node_id);
  if (it != nodes_.end()) {
    if (live_locked(it->second, now_ms)) {
      throw Error(Errc::duplicate_node, "node " + info.node_id + " is already registered");
    }
    info.allocated_cores = it->second.allocated_cores;
    info.allocated_memory_mb = it->second.allocated_memory_mb;
  } else {
    info.allocated_cores = 0;
    info.allocated_memory_mb = 0;
  }
  info.last_heartbeat_ms = now_ms;
  info.live = true;
  dead_.erase(info.node_id);
  nodes_[info.node_id] = info;
  return info;
}

NodeInfo Cluster::heartbeat(const std::string& node_id, std::int64_t now_ms) {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw Error(Errc::not_found, "unknown node " + node_id);
  it->second.last_heartbeat_ms = std::max(it->second.last_heartbeat_ms, now_ms);
  NodeInfo out = it->second;
  out.live = live_locked(out, now_ms);
  if (out.live) dead_.erase(node_id);
  return out;
}

std::vector<std::string> Cluster::sweep(std::int64_t now_ms) {
  std::lock_guard lock(mu_);
  std::vector<std::string> newly_dead;
  for (const auto& [id, n] : nodes_) {
    if (!live_locked(n, now_ms) && dead_.insert(id).second) newly_dead.push_back(id);
  }
  return newly_dead;
}

std::vector<NodeInfo> Cluster::nodes(std::int64_t now_ms) const {
  std::lock_guard lock(mu_);
  std::vector<NodeInfo> out;
  for (const auto& [_, n] : nodes_) {
    out.push_back(n);
    out.back().live = live_locked(n, now_ms);
  }
  return out;
}

std::vector<NodeInfo> Cluster::live_nodes(std::int64_t now_ms) const {
  auto all = nodes(now_ms);
  std::erase_if(all, [](const NodeInfo& n) { return !n.live; });
  return all;
}

std::optional<NodeInfo> Cluster::node(const std::string& node_id, std::int64_t now_ms) const {
  std::lock_guard lock(mu_);
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) return std::nullopt;
  NodeInfo out = it->second;
  out.live = live_locked(out, now_ms);
  return out;
}

bool Cluster::is_live(const std::string& node_id, std::int64_t now_ms) const {
  auto n = node(node_id, now_ms);
  return n && n->live;
}

Placement Cluster::place_locked(const ResourceRequest& request, std::int64_t now_ms,
                                const std::set<std::string>& exclude) {
  std::vector<NodeInfo*> candidates;
  for (auto& [id, n] : nodes_) {
    if (live_locked(n, now_ms) && !exclude.contains(id)) candidates.push_back(&n);
  }
  std::sort(candidates.begin(), candidates.end(), [](const NodeInfo* a, const NodeInfo* b) {
    if (a->free_cores() != b->free_cores()) return a->free_cores() > b->free_cores();
    return a->node_id < b->node_id;
  });

  bool any_arch = false;
  bool any_cpu = false;
  for (auto* n : candidates) {
    if (request.arch != Arch::any && n->arch != request.arch) continue;
    any_arch = true;
    if (n->free_cores() < request.cpu_cores) continue;
    any_cpu = true;
    if (n->free_memory_mb() < request.memory_mb) continue;
    n->allocated_cores += request.cpu_cores;
    n->allocated_memory_mb += request.memory_mb;
    Placement p{next_placement_++, n->node_id, request.cpu_cores, request.memory_mb};
    placements_[p.id] = p;
    return p;
  }
  if (candidates.empty()) throw UnschedulableError("nodes");
  if (!any_arch) throw UnschedulableError("arch");
  if (!any_cpu) throw UnschedulableError("cpu");
  throw UnschedulableError("memory");
}

Placement Cluster::place(const ResourceRequest& request, std::int64_t now_ms,
                         const std::set<std::string>& exclude) {
  std::lock_guard lock(mu_);
  return place_locked(request, now_ms, exclude);
}

std::vector<Placement> Cluster::place_task(const TaskSpec& task, std::int64_t now_ms) {
  std::lock_guard lock(mu_);
  if (task.kind != TaskKind::train_distributed) {
    return {place_locked(task.resources, now_ms, {})};
  }
  auto layout = worker_layout(task);
  if (!layout.multi_node) {
    ResourceRequest r = task.resources;
    r.cpu_cores = layout.workers * layout.cores_per_worker;
    return {place_locked(r, now_ms, {})};
  }
  std::vector<Placement> out;
  std::set<std::string> used;
  ResourceRequest per_worker = task.resources;
  per_worker.cpu_cores = layout.cores_per_worker;
  try {
    for (int w = 0; w < layout.workers; ++w) {
      out.push_back(place_locked(per_worker, now_ms, used));
      used.insert(out.back().node_id);
    }
  } catch (const UnschedulableError&) {
    for (const auto& p : out) {
      auto& n = nodes_.at(p.node_id);
      n.allocated_cores -= p.cores;
      n.allocated_memory_mb -= p.memory_mb;
      placements_.erase(p.id);
    }
    throw;
  }
  return out;
}

void Cluster::release(const Placement& placement) {
  std::lock_guard lock(mu_);
  auto it = placements_.find(placement.id);
  if (it == placements_.end()) return;  // already released
  auto n = nodes_.find(it->second.node_id);
  if (n != nodes_.end()) {
    n->second.allocated_cores -= it->second.cores;
    n->second.allocated_memory_mb -= it->second.memory_mb;
  }
  placements_.erase(it);
}

void Cluster::release(std::span<const Placement> placements) {
  for (const auto& p : placements) release(p);
}

}  // namespace edgeflow
