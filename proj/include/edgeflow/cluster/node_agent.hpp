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

#include <atomic>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "edgeflow/cluster/cluster.hpp"
#include "edgeflow/cluster/protocol.hpp"
#include "edgeflow/cluster/task_runner.hpp"

namespace httplib {
class Server;
}

namespace edgeflow {

struct SystemGauges {
  double cpu_util = 0.0;  // 0..1 over the interval since the previous sample
  double mem_used_mb = 0.0;
};

// Whole-machine gauges read from /proc.
class SystemSampler {
 public:
  SystemGauges sample();

 private:
  std::uint64_t prev_total_ = 0;
  std::uint64_t prev_idle_ = 0;
};

struct NodeAgentOptions {
  std::string coordinator_url;
  NodeInfo node;
  std::filesystem::path scratch_root;
  int heartbeat_ms = 500;
  // Give up once the coordinator has been unreachable this long.
  int orphan_timeout_ms = 30'000;
};

// Worker-node process: registers with the coordinator, heartbeats, and runs
// tasks posted to /v1/nodes/{id}/exec, reporting back to
// /v1/nodes/{id}/complete.
class NodeAgent {
 public:
  explicit NodeAgent(NodeAgentOptions options);
  ~NodeAgent();

  // Binds the agent's HTTP port and registers. Throws if registration fails.
  void start();
  // Blocks until stop() or the coordinator goes away.
  void run();
  void stop();

  const std::string& address() const { return address_; }

 private:
  void execute(DispatchRequest request);
  void report(const TaskResult& result);

  NodeAgentOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
  std::string address_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::vector<std::thread> tasks_;
};

// Coordinator-side dispatcher for agent processes. Completions arrive over
// HTTP and are handed to complete().
class RemoteDispatcher : public TaskDispatcher {
 public:
  explicit RemoteDispatcher(Cluster& cluster);
  ~RemoteDispatcher() override;

  void dispatch(DispatchRequest request, CompletionSink sink) override;
  // Returns false for results nobody is waiting on (stale attempts).
  bool complete(TaskResult result);

 private:
  using Key = std::tuple<std::string, std::string, int>;

  Cluster& cluster_;
  std::mutex mu_;
  struct Sender {
    std::thread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  void reap_locked();

  std::map<Key, CompletionSink> pending_;
  std::vector<Sender> senders_;
};

}  // namespace edgeflow
