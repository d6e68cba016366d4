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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "edgeflow/cluster/cluster.hpp"
#include "edgeflow/cluster/node_agent.hpp"
#include "edgeflow/metrics/metric_store.hpp"
#include "edgeflow/objstore/object_store.hpp"
#include "edgeflow/orchestrator/orchestrator.hpp"
#include "edgeflow/registry/registry.hpp"
#include "edgeflow/serving/serving.hpp"

namespace httplib {
class Server;
}

namespace edgeflow {

struct ModuleToggles {
  bool objstore = true;
  bool registry = true;
  bool serving = true;
  bool metrics = true;

  bool operator==(const ModuleToggles&) const = default;
};

void to_json(json& j, const ModuleToggles& v);
void from_json(const json& j, ModuleToggles& v);

struct CoordinatorOptions {
  std::filesystem::path data_root;
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  int tick_ms = 250;
  int autoscale_ms = 1000;
  std::int64_t liveness_window_ms = 2000;
  int retry_limit = 2;
  std::int64_t quota_bytes = 0;
  ModuleToggles modules;
};

// Deploy-model tasks: registers the task's first input as a new version of
// param `model`, promotes it to production and (re)deploys its endpoint.
// Scaling and replica settings come from task params. Without a serving
// plane the model is only registered.
LocalExecutor make_deploy_executor(Registry& registry, ServingPlane* serving);

// The control-plane process: owns every service and the orchestrator loop
// and exposes them over one HTTP port.
//
// Disabled modules keep no HTTP routes. Serving needs the registry. The
// object store stays available internally because the orchestrator keeps
// its artifacts there; with it disabled remote nodes cannot fetch inputs.
class Coordinator {
 public:
  explicit Coordinator(CoordinatorOptions options);
  ~Coordinator();

  // Binds the port, writes <data_root>/coordinator.json and starts the loop.
  void start();
  // Blocks until stop() or POST /v1/admin/shutdown.
  void wait();
  // False if still running after `timeout`.
  bool wait_for(std::chrono::milliseconds timeout);
  void stop();

  const std::string& url() const { return url_; }

  Cluster& cluster() { return *cluster_; }
  ObjectStore& store() { return *store_; }
  Orchestrator& orchestrator() { return *orchestrator_; }
  Registry* registry() { return registry_.get(); }
  ServingPlane* serving() { return serving_.get(); }
  MetricStore* metrics() { return metrics_.get(); }

 private:
  void mount_routes();
  void loop();

  CoordinatorOptions options_;
  std::unique_ptr<ObjectStore> store_;
  std::unique_ptr<MetricStore> metrics_;
  std::unique_ptr<MetricSource> metric_source_;  // used when metrics are off
  std::unique_ptr<Registry> registry_;
  std::unique_ptr<Cluster> cluster_;
  std::unique_ptr<ServingPlane> serving_;
  std::unique_ptr<RemoteDispatcher> dispatcher_;
  std::unique_ptr<Orchestrator> orchestrator_;

  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
  std::thread loop_thread_;
  std::string url_;

  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
};

}  // namespace edgeflow
