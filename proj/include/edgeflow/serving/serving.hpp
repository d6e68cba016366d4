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
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "edgeflow/cluster/cluster.hpp"
#include "edgeflow/core/serialize.hpp"
#include "edgeflow/metrics/metric_store.hpp"
#include "edgeflow/objstore/object_store.hpp"
#include "edgeflow/registry/registry.hpp"
#include "edgeflow/util/process.hpp"

namespace edgeflow {

enum class EndpointStatus { healthy, degraded, unhealthy };
std::string to_string(EndpointStatus v);

struct ScalingConfig {
  int min_replicas = 1;
  int max_replicas = 4;
  double target_inflight = 2.0;  // per replica
  std::int64_t cooldown_ms = 5000;
};

// "synthetic": holds its core for service_time_ms (times the node's speed
// factor) and answers with payload_bytes of filler. "process": a warm
// serve-mode process speaking length-prefixed frames on stdin/stdout.
struct ReplicaSpec {
  std::string kind = "synthetic";
  double service_time_ms = 20.0;
  std::int64_t payload_bytes = 64;
  std::string command;
};

struct DeployRequest {
  ModelSelector selector;
  ScalingConfig scaling;
  ReplicaSpec replica;
  // Replicas to start with; defaults to min_replicas.
  std::optional<int> initial_replicas;
};

void to_json(json& j, const ScalingConfig& v);
void from_json(const json& j, ScalingConfig& v);
void to_json(json& j, const ReplicaSpec& v);
void from_json(const json& j, ReplicaSpec& v);
void from_json(const json& j, DeployRequest& v);

struct ReplicaInfo {
  int replica_id = 0;
  std::string node_id;
  int inflight = 0;
  double service_time_ms = 0.0;
  std::int64_t started_ms = 0;
  bool live = true;
  bool draining = false;
  std::uint64_t served = 0;
};

struct EndpointInfo {
  std::string model;
  int version = 0;
  std::vector<ReplicaInfo> replicas;  // routable ones (live, not draining)
  int draining = 0;
  ScalingConfig scaling;
  ReplicaSpec replica;
  EndpointStatus status = EndpointStatus::unhealthy;
  double error_rate = 0.0;  // over the health window
  std::uint64_t requests = 0;
  std::uint64_t errors = 0;
};

void to_json(json& j, const ReplicaInfo& v);
void to_json(json& j, const EndpointInfo& v);

struct PredictResult {
  std::string body;
  int replica_id = 0;
  double latency_ms = 0.0;
  int attempts = 1;
};

enum class ScaleAction { hold, scale_up, scale_down };
std::string to_string(ScaleAction v);

struct AutoscaleInput {
  int current = 1;
  int min_replicas = 1;
  int max_replicas = 1;
  double target_inflight = 2.0;
  double avg_inflight = 0.0;  // time-weighted, whole endpoint
  std::int64_t cooldown_ms = 5000;
  // Since when desired has been continuously below current.
  std::optional<std::int64_t> below_since_ms;
};

struct AutoscaleDecision {
  ScaleAction action = ScaleAction::hold;
  int desired = 1;          // clamped policy value
  int replicas = 1;         // count to run after applying the decision
  std::optional<std::int64_t> below_since_ms;
};

// desired = ceil(avg_inflight / target) clamped to [min, max]. Scale-up is
// immediate; scale-down waits until desired has stayed below current for
// the cooldown.
AutoscaleDecision autoscale_decide(const AutoscaleInput& in, std::int64_t now_ms);

struct ServingOptions {
  std::filesystem::path scratch_root;
  std::int64_t health_window_ms = 10'000;
};

class ServingPlane {
 public:
  ServingPlane(Cluster& cluster, Registry& registry, BlobStore& store, MetricStore* metrics,
               ServingOptions options = {});
  ~ServingPlane();

  // Creates the endpoint, or swaps in a new replica set and drains the old
  // one. Throws NotFound or Unschedulable, leaving any old endpoint intact.
  EndpointInfo deploy(const DeployRequest& request, std::int64_t now_ms);
  void undeploy(const std::string& model);

  // Least-inflight live replica; ties go to the one that has served fewer
  // requests, then to the lowest id. A replica failure is
  // retried once on another replica before surfacing as ReplicaFailure.
  PredictResult predict(const std::string& model, std::string_view request);

  EndpointInfo endpoint(const std::string& model) const;
  std::vector<EndpointInfo> endpoints() const;

  // Simulates a replica crash: in-flight and queued requests on it fail.
  void kill_replica(const std::string& model, int replica_id);

  // One control step for every endpoint: retire dead and drained replicas,
  // apply the autoscaler, publish health and load gauges.
  void autoscale_cycle(std::int64_t now_ms);

  void shutdown();

 private:
  class Replica;
  struct Endpoint;

  std::shared_ptr<Endpoint> find(const std::string& model) const;
  std::shared_ptr<Replica> start_replica(Endpoint& ep, std::int64_t now_ms);
  EndpointInfo info_locked(const Endpoint& ep, std::int64_t now_ms) const;
  void record_outcome(Endpoint& ep, bool ok, double latency_ms);
  void publish(const EndpointInfo& info, double avg_inflight, std::int64_t now_ms);

  Cluster& cluster_;
  Registry& registry_;
  BlobStore& store_;
  MetricStore* metrics_;
  ServingOptions options_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Endpoint>> endpoints_;
};

}  // namespace edgeflow
