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

#include "edgeflow/serving/serving.hpp"

#include <csignal>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>

#include "edgeflow/cluster/protocol.hpp"
#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

std::string to_string(EndpointStatus v) {
  switch (v) {
    case EndpointStatus::healthy: return "healthy";
    case EndpointStatus::degraded: return "degraded";
    case EndpointStatus::unhealthy: return "unhealthy";
  }
  return "unhealthy";
}

std::string to_string(ScaleAction v) {
  switch (v) {
    case ScaleAction::hold: return "hold";
    case ScaleAction::scale_up: return "scale_up";
    case ScaleAction::scale_down: return "scale_down";
  }
  return "hold";
}

void to_json(json& j, const ScalingConfig& v) {
  j = json{{"min_replicas", v.min_replicas},
           {"max_replicas", v.max_replicas},
           {"target_inflight", v.target_inflight},
           {"cooldown_ms", v.cooldown_ms}};
}

void from_json(const json& j, ScalingConfig& v) {
  v.min_replicas = j.value("min_replicas", v.min_replicas);
  v.max_replicas = j.value("max_replicas", std::max(v.max_replicas, v.min_replicas));
  v.target_inflight = j.value("target_inflight", v.target_inflight);
  v.cooldown_ms = j.value("cooldown_ms", v.cooldown_ms);
}

void to_json(json& j, const ReplicaSpec& v) {
  j = json{{"kind", v.kind},
           {"service_time_ms", v.service_time_ms},
           {"payload_bytes", v.payload_bytes},
           {"command", v.command}};
}

void from_json(const json& j, ReplicaSpec& v) {
  v.kind = j.value("kind", v.kind);
  v.service_time_ms = j.value("service_time_ms", v.service_time_ms);
  v.payload_bytes = j.value("payload_bytes", v.payload_bytes);
  v.command = j.value("command", v.command);
}

void from_json(const json& j, DeployRequest& v) {
  if (j.contains("selector")) {
    v.selector = j.at("selector").get<ModelSelector>();
  } else {
    v.selector = ModelSelector::latest(j.at("model").get<std::string>());
  }
  v.scaling = j.value("scaling", ScalingConfig{});
  v.replica = j.value("replica", ReplicaSpec{});
  if (j.contains("initial_replicas")) v.initial_replicas = j.at("initial_replicas").get<int>();
}

void to_json(json& j, const ReplicaInfo& v) {
  j = json{{"replica_id", v.replica_id}, {"node_id", v.node_id},
           {"inflight", v.inflight},     {"service_time_ms", v.service_time_ms},
           {"started_ms", v.started_ms}, {"live", v.live},
           {"draining", v.draining},     {"served", v.served}};
}

void to_json(json& j, const EndpointInfo& v) {
  j = json{{"model", v.model},         {"version", v.version},
           {"replicas", v.replicas},   {"draining", v.draining},
           {"scaling", v.scaling},     {"replica", v.replica},
           {"status", to_string(v.status)}, {"error_rate", v.error_rate},
           {"requests", v.requests},   {"errors", v.errors}};
}

AutoscaleDecision autoscale_decide(const AutoscaleInput& in, std::int64_t now_ms) {
  AutoscaleDecision d;
  double raw = in.target_inflight > 0 ? std::ceil(in.avg_inflight / in.target_inflight) : in.max_replicas;
  d.desired = static_cast<int>(std::clamp(raw, static_cast<double>(in.min_replicas),
                                          static_cast<double>(in.max_replicas)));
  d.replicas = in.current;
  if (d.desired > in.current) {
    d.action = ScaleAction::scale_up;
    d.replicas = d.desired;
  } else if (d.desired < in.current) {
    d.below_since_ms = in.below_since_ms.value_or(now_ms);
    if (now_ms - *d.below_since_ms >= in.cooldown_ms) {
      d.action = ScaleAction::scale_down;
      d.replicas = d.desired;
      d.below_since_ms.reset();
    }
  }
  return d;
}

class ServingPlane::Replica {
 public:
  Replica(int id, Placement placement, double service_ms, std::int64_t payload_bytes,
          std::int64_t started_ms)
      : id(id),
        placement(std::move(placement)),
        service_ms(service_ms),
        payload_bytes(payload_bytes),
        started_ms(started_ms) {}

  ~Replica() { kill(); }

  void attach(ChildProcess process) {
    proc_ = std::move(process);
    is_process_ = true;
  }

  bool alive() {
    std::lock_guard lock(m_);
    return alive_;
  }

  void kill() {
    {
      std::lock_guard lock(m_);
      alive_ = false;
    }
    cv_.notify_all();
    if (is_process_ && proc_.valid()) proc_.signal(SIGKILL);
  }

  // Waits for this replica's core, then serves one request.
  std::string serve(std::string_view request, const std::string& model, int version) {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return !busy_ || !alive_; });
    if (!alive_) throw failure();
    busy_ = true;
    std::string response;
    bool ok = true;
    if (is_process_) {
      lock.unlock();
      ok = exchange(request, response);
      lock.lock();
      if (!ok) alive_ = false;
    } else {
      auto deadline = std::chrono::steady_clock::now() +
                      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double, std::milli>(service_ms));
      ok = !cv_.wait_until(lock, deadline, [&] { return !alive_; });
      if (ok) response = synthetic_response(request, model, version);
    }
    busy_ = false;
    lock.unlock();
    if (ok) {
      cv_.notify_one();
      return response;
    }
    cv_.notify_all();
    throw failure();
  }

  const int id;
  const Placement placement;
  const double service_ms;
  const std::int64_t payload_bytes;
  const std::int64_t started_ms;
  std::atomic<int> inflight{0};
  std::atomic<std::uint64_t> served{0};
  std::atomic<bool> draining{false};

 private:
  Error failure() const {
    return Error(Errc::replica_failure, "replica " + std::to_string(id) + " on " + placement.node_id + " failed");
  }

  bool exchange(std::string_view request, std::string& response) {
    if (!proc_.write_all(encode_frame(request))) return false;
    char header[4];
    if (!proc_.read_exact(header, 4)) return false;
    auto b = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(header[i])); };
    std::uint32_t n = b(0) << 24 | b(1) << 16 | b(2) << 8 | b(3);
    response.resize(n);
    return n == 0 || proc_.read_exact(response.data(), n);
  }

  std::string synthetic_response(std::string_view request, const std::string& model, int version) const {
    auto h = sha256_hex(request);
    double prediction = static_cast<double>(std::stoul(h.substr(0, 8), nullptr, 16)) / 4294967296.0;
    std::string out = json{{"model", model}, {"version", version}, {"prediction", prediction}}.dump();
    if (static_cast<std::int64_t>(out.size()) < payload_bytes) {
      out.append(static_cast<std::size_t>(payload_bytes) - out.size(), ' ');
    }
    return out;
  }

  std::mutex m_;
  std::condition_variable cv_;
  bool busy_ = false;
  bool alive_ = true;
  bool is_process_ = false;
  ChildProcess proc_;
};

struct ServingPlane::Endpoint {
  std::string model;
  std::mutex control_mu;  // serializes deploy and scaling steps

  std::mutex mu;  // guards everything below
  ModelRecord record;
  ScalingConfig scaling;
  ReplicaSpec spec;
  std::filesystem::path payload_path;
  std::vector<std::shared_ptr<Replica>> replicas;
  std::vector<std::shared_ptr<Replica>> retiring;
  int next_replica_id = 1;
  int total_inflight = 0;
  double inflight_integral = 0.0;
  double last_change = 0.0;
  double window_start = 0.0;
  std::optional<std::int64_t> below_since;
  std::deque<std::pair<std::int64_t, bool>> outcomes;
  std::uint64_t requests = 0;
  std::uint64_t errors = 0;

  void account(int delta) {
    double now = steady_ms();
    inflight_integral += total_inflight * (now - last_change);
    last_change = now;
    total_inflight += delta;
  }
};

ServingPlane::ServingPlane(Cluster& cluster, Registry& registry, BlobStore& store,
                           MetricStore* metrics, ServingOptions options)
    : cluster_(cluster),
      registry_(registry),
      store_(store),
      metrics_(metrics),
      options_(std::move(options)) {}

ServingPlane::~ServingPlane() { shutdown(); }

void ServingPlane::shutdown() {
  std::map<std::string, std::shared_ptr<Endpoint>> eps;
  {
    std::unique_lock lock(mu_);
    eps.swap(endpoints_);
  }
  for (auto& [_, ep] : eps) {
    std::lock_guard lock(ep->mu);
    for (auto* list : {&ep->replicas, &ep->retiring}) {
      for (auto& r : *list) {
        r->kill();
        cluster_.release(r->placement);
      }
      list->clear();
    }
  }
}

std::shared_ptr<ServingPlane::Endpoint> ServingPlane::find(const std::string& model) const {
  std::shared_lock lock(mu_);
  auto it = endpoints_.find(model);
  if (it == endpoints_.end()) throw Error(Errc::not_found, "no endpoint for model " + model);
  return it->second;
}

std::shared_ptr<ServingPlane::Replica> ServingPlane::start_replica(Endpoint& ep, std::int64_t now_ms) {
  ResourceRequest req;
  req.cpu_cores = 1;
  req.memory_mb = 128;
  auto placement = cluster_.place(req, now_ms);
  double speed = 1.0;
  if (auto n = cluster_.node(placement.node_id, now_ms)) speed = n->speed;
  int id;
  {
    std::lock_guard lock(ep.mu);
    id = ep.next_replica_id++;
  }
  auto replica = std::make_shared<Replica>(id, placement, ep.spec.service_time_ms * speed,
                                           ep.spec.payload_bytes, now_ms);
  if (ep.spec.kind == "process") {
    auto argv = split_command(ep.spec.command);
    if (argv.empty()) {
      cluster_.release(placement);
      throw Error(Errc::invalid_argument, "process replicas need a command");
    }
    argv.push_back(ep.payload_path.string());
    SpawnOptions so;
    so.pipe_stdio = true;
    so.env["EDGEFLOW_MODEL_PATH"] = ep.payload_path.string();
    so.stderr_file = ep.payload_path.parent_path() / ("replica-" + std::to_string(id) + ".stderr");
    try {
      replica->attach(ChildProcess::spawn(argv, so));
    } catch (...) {
      cluster_.release(placement);
      throw;
    }
  } else if (ep.spec.kind != "synthetic") {
    cluster_.release(placement);
    throw Error(Errc::invalid_argument, "unknown replica kind '" + ep.spec.kind + "'");
  }
  return replica;
}

EndpointInfo ServingPlane::deploy(const DeployRequest& request, std::int64_t now_ms) {
  const auto& sc = request.scaling;
  if (sc.min_replicas < 1 || sc.max_replicas < sc.min_replicas || !(sc.target_inflight > 0) ||
      sc.cooldown_ms < 0) {
    throw Error(Errc::invalid_argument, "scaling config needs 1 <= min <= max and target > 0");
  }
  if (!(request.replica.service_time_ms >= 0)) {
    throw Error(Errc::invalid_argument, "service_time_ms must be non-negative");
  }
  int initial = std::clamp(request.initial_replicas.value_or(sc.min_replicas), sc.min_replicas, sc.max_replicas);
  auto record = registry_.resolve(request.selector);

  std::shared_ptr<Endpoint> ep;
  bool fresh = false;
  {
    std::unique_lock lock(mu_);
    auto it = endpoints_.find(record.name);
    if (it == endpoints_.end()) {
      ep = std::make_shared<Endpoint>();
      ep->model = record.name;
      fresh = true;
    } else {
      ep = it->second;
    }
  }

  std::lock_guard control(ep->control_mu);
  // A staging copy of the endpoint carries the new config while its
  // replicas start; routing keeps using the old set meanwhile.
  Endpoint staging;
  staging.spec = request.replica;
  {
    std::lock_guard lock(ep->mu);
    staging.next_replica_id = ep->next_replica_id;
  }
  if (request.replica.kind == "process") {
    auto dir = options_.scratch_root / "replicas" / (record.name + ".v" + std::to_string(record.version));
    std::filesystem::create_directories(dir);
    staging.payload_path = dir / "payload.bin";
    write_file_atomic(staging.payload_path, store_.get(record.payload.bucket, record.payload.key).bytes);
  }
  std::vector<std::shared_ptr<Replica>> started;
  try {
    for (int i = 0; i < initial; ++i) started.push_back(start_replica(staging, now_ms));
  } catch (...) {
    for (auto& r : started) {
      r->kill();
      cluster_.release(r->placement);
    }
    throw;
  }

  {
    std::lock_guard lock(ep->mu);
    for (auto& old : ep->replicas) {
      old->draining = true;
      ep->retiring.push_back(old);
    }
    ep->replicas = std::move(started);
    ep->next_replica_id = staging.next_replica_id;
    ep->record = record;
    ep->scaling = sc;
    ep->spec = request.replica;
    ep->payload_path = staging.payload_path;
    ep->below_since.reset();
    double now = steady_ms();
    if (fresh) {
      ep->last_change = ep->window_start = now;
    }
  }
  if (fresh) {
    std::unique_lock lock(mu_);
    endpoints_[record.name] = ep;
  }
  std::lock_guard lock(ep->mu);
  std::erase_if(ep->retiring, [&](const std::shared_ptr<Replica>& r) {
    if (r->inflight.load() > 0) return false;
    r->kill();
    cluster_.release(r->placement);
    return true;
  });
  auto info = info_locked(*ep, now_ms);
  if (metrics_) metrics_->record("model_healthy", {{"model", ep->model}}, info.status == EndpointStatus::healthy ? 1.0 : 0.0, now_ms);
  return info;
}

void ServingPlane::undeploy(const std::string& model) {
  std::shared_ptr<Endpoint> ep;
  {
    std::unique_lock lock(mu_);
    auto it = endpoints_.find(model);
    if (it == endpoints_.end()) throw Error(Errc::not_found, "no endpoint for model " + model);
    ep = it->second;
    endpoints_.erase(it);
  }
  std::lock_guard control(ep->control_mu);
  std::lock_guard lock(ep->mu);
  for (auto* list : {&ep->replicas, &ep->retiring}) {
    for (auto& r : *list) {
      r->kill();
      cluster_.release(r->placement);
    }
    list->clear();
  }
}

void ServingPlane::record_outcome(Endpoint& ep, bool ok, double latency_ms) {
  auto now = edgeflow::now_ms();
  {
    std::lock_guard lock(ep.mu);
    ++ep.requests;
    if (!ok) ++ep.errors;
    ep.outcomes.emplace_back(now, ok);
    while (!ep.outcomes.empty() && ep.outcomes.front().first < now - options_.health_window_ms) {
      ep.outcomes.pop_front();
    }
  }
  if (metrics_ && ok) {
    try {
      metrics_->record("inference_latency_ms", {{"model", ep.model}}, latency_ms, now);
    } catch (const Error&) {
    }
  }
}

PredictResult ServingPlane::predict(const std::string& model, std::string_view request) {
  auto ep = find(model);
  const double t0 = steady_ms();
  std::set<int> tried;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    std::shared_ptr<Replica> r;
    std::string name;
    int version = 0;
    {
      std::lock_guard lock(ep->mu);
      for (auto& c : ep->replicas) {
        if (tried.contains(c->id) || c->draining || !c->alive()) continue;
        // Equal inflight goes to the replica that has served fewer; ids ascend.
        auto load = [](const Replica& x) { return std::pair(x.inflight.load(), x.served.load()); };
        if (!r || load(*c) < load(*r)) r = c;
      }
      if (r) {
        ++r->inflight;
        ep->account(+1);
      }
      name = ep->record.name;
      version = ep->record.version;
    }
    if (!r) {
      record_outcome(*ep, false, 0.0);
      if (attempt == 1) throw Error(Errc::no_live_replica, "NoLiveReplica(" + model + ")");
      throw Error(Errc::replica_failure, "ReplicaFailure(" + model + "): no replica left to retry on");
    }
    std::optional<std::string> body;
    std::exception_ptr unexpected;
    try {
      body = r->serve(request, name, version);
    } catch (const Error& e) {
      if (e.code() != Errc::replica_failure) unexpected = std::current_exception();
    } catch (...) {
      unexpected = std::current_exception();
    }
    {
      std::lock_guard lock(ep->mu);
      --r->inflight;
      ep->account(-1);
      if (body) ++r->served;
    }
    if (unexpected) std::rethrow_exception(unexpected);
    if (body) {
      PredictResult out;
      out.body = std::move(*body);
      out.replica_id = r->id;
      out.latency_ms = steady_ms() - t0;
      out.attempts = attempt;
      record_outcome(*ep, true, out.latency_ms);
      return out;
    }
    tried.insert(r->id);
  }
  record_outcome(*ep, false, 0.0);
  throw Error(Errc::replica_failure, "ReplicaFailure(" + model + ")");
}

EndpointInfo ServingPlane::info_locked(const Endpoint& ep, std::int64_t now_ms) const {
  EndpointInfo info;
  info.model = ep.model;
  info.version = ep.record.version;
  info.scaling = ep.scaling;
  info.replica = ep.spec;
  info.requests = ep.requests;
  info.errors = ep.errors;
  for (const auto& r : ep.replicas) {
    ReplicaInfo ri;
    ri.replica_id = r->id;
    ri.node_id = r->placement.node_id;
    ri.inflight = r->inflight.load();
    ri.service_time_ms = r->service_ms;
    ri.started_ms = r->started_ms;
    ri.live = r->alive();
    ri.draining = r->draining;
    ri.served = r->served.load();
    if (ri.live) info.replicas.push_back(ri);
  }
  info.draining = static_cast<int>(ep.retiring.size());
  std::size_t window = 0, failed = 0;
  for (const auto& [ts, ok] : ep.outcomes) {
    if (ts < now_ms - options_.health_window_ms) continue;
    ++window;
    if (!ok) ++failed;
  }
  info.error_rate = window ? static_cast<double>(failed) / static_cast<double>(window) : 0.0;
  if (info.replicas.empty()) {
    info.status = EndpointStatus::unhealthy;
  } else if (info.error_rate >= 0.01) {
    info.status = EndpointStatus::degraded;
  } else {
    info.status = EndpointStatus::healthy;
  }
  return info;
}

EndpointInfo ServingPlane::endpoint(const std::string& model) const {
  auto ep = find(model);
  std::lock_guard lock(ep->mu);
  return info_locked(*ep, edgeflow::now_ms());
}

std::vector<EndpointInfo> ServingPlane::endpoints() const {
  std::vector<std::shared_ptr<Endpoint>> eps;
  {
    std::shared_lock lock(mu_);
    for (const auto& [_, ep] : endpoints_) eps.push_back(ep);
  }
  std::vector<EndpointInfo> out;
  for (const auto& ep : eps) {
    std::lock_guard lock(ep->mu);
    out.push_back(info_locked(*ep, edgeflow::now_ms()));
  }
  return out;
}

void ServingPlane::kill_replica(const std::string& model, int replica_id) {
  auto ep = find(model);
  std::shared_ptr<Replica> victim;
  {
    std::lock_guard lock(ep->mu);
    for (auto& r : ep->replicas) {
      if (r->id == replica_id) victim = r;
    }
  }
  if (!victim) throw Error(Errc::not_found, "no replica " + std::to_string(replica_id) + " for " + model);
  victim->kill();
}

void ServingPlane::publish(const EndpointInfo& info, double avg_inflight, std::int64_t now_ms) {
  if (!metrics_) return;
  Labels l{{"model", info.model}};
  metrics_->record("model_healthy", l, info.status == EndpointStatus::healthy ? 1.0 : 0.0, now_ms);
  metrics_->record("endpoint_replicas", l, static_cast<double>(info.replicas.size()), now_ms);
  metrics_->record("endpoint_inflight_avg", l, avg_inflight, now_ms);
  metrics_->record("endpoint_error_rate", l, info.error_rate, now_ms);
}

void ServingPlane::autoscale_cycle(std::int64_t now_ms) {
  std::vector<std::shared_ptr<Endpoint>> eps;
  {
    std::shared_lock lock(mu_);
    for (const auto& [_, ep] : endpoints_) eps.push_back(ep);
  }
  for (auto& ep : eps) {
    std::lock_guard control(ep->control_mu);
    AutoscaleInput in;
    {
      std::lock_guard lock(ep->mu);
      std::erase_if(ep->replicas, [&](const std::shared_ptr<Replica>& r) {
        if (r->alive()) return false;
        ep->retiring.push_back(r);
        return true;
      });
      std::erase_if(ep->retiring, [&](const std::shared_ptr<Replica>& r) {
        if (r->inflight.load() > 0) return false;
        r->kill();
        cluster_.release(r->placement);
        return true;
      });
      ep->account(0);
      double span = ep->last_change - ep->window_start;
      in.avg_inflight = span > 0 ? ep->inflight_integral / span : ep->total_inflight;
      ep->inflight_integral = 0.0;
      ep->window_start = ep->last_change;
      in.current = static_cast<int>(ep->replicas.size());
      in.min_replicas = ep->scaling.min_replicas;
      in.max_replicas = ep->scaling.max_replicas;
      in.target_inflight = ep->scaling.target_inflight;
      in.cooldown_ms = ep->scaling.cooldown_ms;
      in.below_since_ms = ep->below_since;
    }
    auto decision = autoscale_decide(in, now_ms);
    {
      std::lock_guard lock(ep->mu);
      ep->below_since = decision.below_since_ms;
    }
    if (decision.replicas > in.current) {
      for (int i = in.current; i < decision.replicas; ++i) {
        try {
          auto r = start_replica(*ep, now_ms);
          std::lock_guard lock(ep->mu);
          ep->replicas.push_back(r);
        } catch (const UnschedulableError&) {
          break;  // retried next cycle
        }
      }
    } else if (decision.replicas < in.current) {
      std::lock_guard lock(ep->mu);
      while (static_cast<int>(ep->replicas.size()) > decision.replicas) {
        auto r = ep->replicas.back();  // highest id
        ep->replicas.pop_back();
        r->draining = true;
        ep->retiring.push_back(r);
      }
    }
    EndpointInfo info;
    {
      std::lock_guard lock(ep->mu);
      info = info_locked(*ep, edgeflow::now_ms());
    }
    publish(info, in.avg_inflight, now_ms);
  }
}

}  // namespace edgeflow
