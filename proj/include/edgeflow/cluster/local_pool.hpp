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

#include <condition_variable>
#include <cstdint>
#include <list>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "edgeflow/cluster/cluster.hpp"
#include "edgeflow/cluster/protocol.hpp"
#include "edgeflow/cluster/task_runner.hpp"

namespace edgeflow {

// Nodes simulated inside the current process: each dispatched attempt runs on
// its own thread. kill() models a crashed node: heartbeats stop and results
// of attempts already running there are lost.
class LocalNodePool : public TaskDispatcher {
 public:
  LocalNodePool(Cluster& cluster, BlobStore& store, RunnerOptions base);
  ~LocalNodePool() override;

  NodeInfo add_node(NodeInfo info, std::int64_t now_ms);
  void pulse(std::int64_t now_ms);
  void kill(const std::string& node_id);
  // Brings a killed node back (it re-registers on the next pulse).
  void revive(const std::string& node_id, std::int64_t now_ms);

  void dispatch(DispatchRequest request, CompletionSink sink) override;

  std::size_t inflight() const;
  void wait_idle();

 private:
  struct Worker {
    std::thread thread;
    bool done = false;
  };

  void reap_locked();

  Cluster& cluster_;
  BlobStore& store_;
  RunnerOptions base_;
  mutable std::mutex mu_;
  std::condition_variable idle_cv_;
  std::map<std::string, NodeInfo> nodes_;
  std::set<std::string> killed_;
  std::list<Worker> workers_;
  std::size_t running_ = 0;
};

}  // namespace edgeflow
