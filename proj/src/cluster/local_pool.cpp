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

#include "edgeflow/cluster/local_pool.hpp"

namespace edgeflow {

LocalNodePool::LocalNodePool(Cluster& cluster, BlobStore& store, RunnerOptions base)
    : cluster_(cluster), store_(store), base_(std::move(base)) {}

LocalNodePool::~LocalNodePool() {
  std::list<Worker> workers;
  {
    std::lock_guard lock(mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) {
    if (w.thread.joinable()) w.thread.join();
  }
}

NodeInfo LocalNodePool::add_node(NodeInfo info, std::int64_t now_ms) {
  auto registered = cluster_.register_node(info, now_ms);
  std::lock_guard lock(mu_);
  nodes_[info.node_id] = info;
  killed_.erase(info.node_id);
  return registered;
}

void LocalNodePool::pulse(std::int64_t now_ms) {
  std::vector<std::string> ids;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, _] : nodes_) {
      if (!killed_.contains(id)) ids.push_back(id);
    }
  }
  for (const auto& id : ids) cluster_.heartbeat(id, now_ms);
}

void LocalNodePool::kill(const std::string& node_id) {
  std::lock_guard lock(mu_);
  killed_.insert(node_id);
}

void LocalNodePool::revive(const std::string& node_id, std::int64_t now_ms) {
  NodeInfo info;
  {
    std::lock_guard lock(mu_);
    killed_.erase(node_id);
    info = nodes_.at(node_id);
  }
  if (!cluster_.is_live(node_id, now_ms)) cluster_.register_node(info, now_ms);
}

void LocalNodePool::reap_locked() {
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (it->done) {
      it->thread.join();
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
}

void LocalNodePool::dispatch(DispatchRequest request, CompletionSink sink) {
  std::string node = request.placements.empty() ? std::string() : request.placements.front().node_id;
  std::lock_guard lock(mu_);
  reap_locked();
  if (killed_.contains(node)) return;  // lost in transit; liveness sweep recovers it
  ++running_;
  auto& worker = workers_.emplace_back();
  worker.thread = std::thread([this, &worker, node, request = std::move(request),
                               sink = std::move(sink)]() mutable {
    RunnerOptions opts = base_;
    opts.node_id = node;
    auto result = execute_task(request, store_, opts);
    bool lost;
    {
      std::lock_guard lock(mu_);
      lost = killed_.contains(node);
    }
    if (!lost) sink(std::move(result));
    std::lock_guard lock(mu_);
    worker.done = true;
    if (--running_ == 0) idle_cv_.notify_all();
  });
}

std::size_t LocalNodePool::inflight() const {
  std::lock_guard lock(mu_);
  return running_;
}

void LocalNodePool::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [&] { return running_ == 0; });
}

}  // namespace edgeflow
