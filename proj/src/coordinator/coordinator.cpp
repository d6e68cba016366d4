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

#include "edgeflow/coordinator/coordinator.hpp"

#include <unistd.h>

#include "edgeflow/metrics/http.hpp"
#include "edgeflow/objstore/http.hpp"
#include "edgeflow/registry/http.hpp"
#include "edgeflow/util/http.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

namespace {

class UnavailableMetrics : public MetricSource {
 public:
  std::optional<MetricSample> latest(const std::string&, const Labels&) override {
    throw Error(Errc::metric_store_unavailable, "metrics module is disabled");
  }
};

double num_param(const TaskSpec& t, const std::string& key, double fallback) {
  auto it = t.params.find(key);
  if (it == t.params.end()) return fallback;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::invalid_argument, "param " + key + " must be a number");
  }
}

WorkflowId resolve_workflow(Orchestrator& orch, const json& body) {
  auto name = body.at("workflow").get<std::string>();
  if (body.contains("version")) return {name, body.at("version").get<int>()};
  auto latest = orch.latest_workflow(name);
  if (!latest) throw Error(Errc::unknown_workflow, "unknown workflow " + name);
  return latest->id();
}

}  // namespace

void to_json(json& j, const ModuleToggles& v) {
  j = json{{"objstore", v.objstore}, {"registry", v.registry}, {"serving", v.serving}, {"metrics", v.metrics}};
}

void from_json(const json& j, ModuleToggles& v) {
  v.objstore = j.value("objstore", true);
  v.registry = j.value("registry", true);
  v.serving = j.value("serving", true);
  v.metrics = j.value("metrics", true);
}

LocalExecutor make_deploy_executor(Registry& registry, ServingPlane* serving) {
  return [&registry, serving](const DispatchRequest& r) {
    TaskResult out;
    out.node_id = "coordinator";
    out.start_ms = now_ms();
    if (r.inputs.empty()) throw Error(Errc::invalid_argument, "deploy-model needs a model input");
    const auto& t = r.task;
    auto name = t.param("model", "model");
    auto rec = registry.register_model(name, r.inputs.front().ref,
                                       {{"run_id", r.run_id}, {"task", t.name}, {"cache_key", r.cache_key}});
    registry.set_stage(name, rec.version, ModelStage::production);
    out.metrics["model_version"] = rec.version;
    if (serving) {
      DeployRequest d;
      d.selector = ModelSelector::at_version(name, rec.version);
      d.scaling.min_replicas = static_cast<int>(num_param(t, "min_replicas", 1));
      d.scaling.max_replicas = static_cast<int>(num_param(t, "max_replicas", std::max(d.scaling.min_replicas, 4)));
      d.scaling.target_inflight = num_param(t, "target_inflight", d.scaling.target_inflight);
      d.scaling.cooldown_ms = static_cast<std::int64_t>(num_param(t, "cooldown_ms", 5000));
      d.replica.kind = t.param("replica_kind", "synthetic");
      d.replica.service_time_ms = num_param(t, "service_time_ms", d.replica.service_time_ms);
      d.replica.payload_bytes = static_cast<std::int64_t>(num_param(t, "payload_bytes", 64));
      d.replica.command = t.param("serve_command", "");
      auto info = serving->deploy(d, now_ms());
      out.metrics["replicas"] = static_cast<double>(info.replicas.size());
    }
    out.ok = true;
    out.end_ms = now_ms();
    return out;
  };
}

Coordinator::Coordinator(CoordinatorOptions options) : options_(std::move(options)) {
  auto root = options_.data_root;
  std::filesystem::create_directories(root);
  store_ = std::make_unique<ObjectStore>(root / "objects", ObjectStoreOptions{options_.quota_bytes});
  if (options_.modules.metrics) {
    metrics_ = std::make_unique<MetricStore>();
  } else {
    metric_source_ = std::make_unique<UnavailableMetrics>();
  }
  if (options_.modules.registry) {
    registry_ = std::make_unique<Registry>(*store_, root / "registry.log");
  }
  cluster_ = std::make_unique<Cluster>(ClusterOptions{options_.liveness_window_ms});
  if (options_.modules.serving && registry_) {
    serving_ = std::make_unique<ServingPlane>(*cluster_, *registry_, *store_, metrics_.get(),
                                              ServingOptions{root / "scratch"});
  }
  dispatcher_ = std::make_unique<RemoteDispatcher>(*cluster_);
  OrchestratorOptions oo;
  oo.retry_limit = options_.retry_limit;
  oo.catalog_path = root / "catalog.jsonl";
  MetricSource& source = metrics_ ? static_cast<MetricSource&>(*metrics_) : *metric_source_;
  orchestrator_ = std::make_unique<Orchestrator>(*cluster_, *store_, source, *dispatcher_, oo);
  if (registry_) {
    orchestrator_->set_local_executor(TaskKind::deploy_model, make_deploy_executor(*registry_, serving_.get()));
  } else {
    orchestrator_->set_local_executor(TaskKind::deploy_model, [](const DispatchRequest&) -> TaskResult {
      throw Error(Errc::unavailable, "registry module is disabled");
    });
  }
}

Coordinator::~Coordinator() {
  stop();
  if (server_thread_.joinable()) server_thread_.join();
  if (loop_thread_.joinable()) loop_thread_.join();
  if (serving_) serving_->shutdown();
}

void Coordinator::start() {
  server_ = std::make_unique<httplib::Server>();
  server_->new_task_queue = [] { return new httplib::ThreadPool(64); };
  mount_routes();
  int port = options_.port == 0 ? server_->bind_to_any_port(options_.host)
                                : (server_->bind_to_port(options_.host, options_.port) ? options_.port : -1);
  if (port <= 0) throw Error(Errc::io_error, "coordinator could not bind " + options_.host);
  url_ = "http://" + options_.host + ":" + std::to_string(port);
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  loop_thread_ = std::thread([this] { loop(); });
  write_file_atomic(options_.data_root / "coordinator.json",
                    json{{"url", url_}, {"pid", static_cast<long>(::getpid())}}.dump());
}

void Coordinator::wait() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return stopping_; });
}

bool Coordinator::wait_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [this] { return stopping_; });
}

void Coordinator::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (server_) server_->stop();
}

void Coordinator::loop() {
  std::int64_t last_autoscale = 0;
  while (true) {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return;
    }
    auto now = now_ms();
    orchestrator_->tick(now);
    if (serving_ && now - last_autoscale >= options_.autoscale_ms) {
      serving_->autoscale_cycle(now);
      last_autoscale = now;
    }
    orchestrator_->wait_for_work(std::chrono::milliseconds(options_.tick_ms));
  }
}

void Coordinator::mount_routes() {
  auto& s = *server_;
  using Req = httplib::Request;
  using Res = httplib::Response;

  s.Get("/v1/health", http::guarded([this](const Req&, Res& res) {
    http::reply_json(res, json{{"status", "ok"},
                               {"modules", options_.modules},
                               {"nodes_live", cluster_->live_nodes(now_ms()).size()}});
  }));
  s.Post("/v1/admin/shutdown", http::guarded([this](const Req&, Res& res) {
    http::reply_json(res, json{{"status", "stopping"}});
    std::thread([this] { stop(); }).detach();
  }));

  // Cluster.
  s.Get("/v1/nodes", http::guarded([this](const Req&, Res& res) {
    http::reply_json(res, json(cluster_->nodes(now_ms())));
  }));
  s.Post("/v1/nodes/register", http::guarded([this](const Req& req, Res& res) {
    auto info = parse_json(req.body).get<NodeInfo>();
    http::reply_json(res, json(cluster_->register_node(info, now_ms())), 201);
  }));
  s.Post(R"(/v1/nodes/([^/]+)/heartbeat)", http::guarded([this](const Req& req, Res& res) {
    std::string id = req.matches[1];
    auto now = now_ms();
    cluster_->heartbeat(id, now);
    if (metrics_ && !req.body.empty()) {
      auto body = parse_json(req.body);
      if (body.contains("cpu_util")) metrics_->record("node_cpu_util", {{"node", id}}, body["cpu_util"].get<double>(), now);
      if (body.contains("mem_used_mb")) {
        metrics_->record("node_mem_used_mb", {{"node", id}}, body["mem_used_mb"].get<double>(), now);
      }
    }
    http::reply_json(res, json{{"ok", true}});
  }));
  s.Post(R"(/v1/nodes/([^/]+)/complete)", http::guarded([this](const Req& req, Res& res) {
    auto result = parse_json(req.body).get<TaskResult>();
    http::reply_json(res, json{{"accepted", dispatcher_->complete(std::move(result))}});
  }));

  // Orchestrator.
  s.Post("/v1/workflows", http::guarded([this](const Req& req, Res& res) {
    auto spec = parse_workflow(req.body);
    orchestrator_->register_workflow(spec, now_ms());
    http::reply_json(res, json{{"name", spec.name}, {"version", spec.version}}, 201);
  }));
  s.Get("/v1/workflows", http::guarded([this](const Req&, Res& res) {
    http::reply_json(res, json(orchestrator_->workflows()));
  }));
  s.Post("/v1/runs", http::guarded([this](const Req& req, Res& res) {
    auto body = parse_json(req.body);
    auto id = resolve_workflow(*orchestrator_, body);
    ParamOverrides overrides;
    if (body.contains("params")) overrides = body.at("params").get<ParamOverrides>();
    http::reply_json(res, json(orchestrator_->submit_run(id, overrides, now_ms())), 201);
  }));
  s.Get("/v1/runs", http::guarded([this](const Req&, Res& res) {
    http::reply_json(res, json(orchestrator_->runs()));
  }));
  s.Get(R"(/v1/runs/([^/]+))", http::guarded([this](const Req& req, Res& res) {
    auto run = orchestrator_->run(req.matches[1]);
    if (!run) throw Error(Errc::not_found, "no run " + std::string(req.matches[1]));
    http::reply_json(res, json(*run));
  }));
  s.Post("/v1/schedules", http::guarded([this](const Req& req, Res& res) {
    auto body = parse_json(req.body);
    auto id = resolve_workflow(*orchestrator_, body);
    http::reply_json(res, json(orchestrator_->add_schedule(id, body.at("cadence").get<std::string>(), now_ms())),
                     201);
  }));
  s.Get("/v1/schedules", http::guarded([this](const Req&, Res& res) {
    http::reply_json(res, json(orchestrator_->schedules()));
  }));
  s.Post("/v1/triggers", http::guarded([this](const Req& req, Res& res) {
    auto spec = parse_json(req.body).get<TriggerSpec>();
    http::reply_json(res, json(orchestrator_->add_trigger(spec, now_ms())), 201);
  }));
  s.Get("/v1/triggers", http::guarded([this](const Req&, Res& res) {
    http::reply_json(res, json(orchestrator_->triggers()));
  }));
  s.Get("/v1/warnings", http::guarded([this](const Req&, Res& res) {
    http::reply_json(res, json(orchestrator_->warnings()));
  }));

  if (options_.modules.objstore) mount_objstore_routes(s, *store_);
  if (registry_) mount_registry_routes(s, *registry_);
  if (metrics_) mount_metrics_routes(s, *metrics_);

  if (serving_) {
    s.Post("/v1/endpoints", http::guarded([this](const Req& req, Res& res) {
      auto request = parse_json(req.body).get<DeployRequest>();
      http::reply_json(res, json(serving_->deploy(request, now_ms())), 201);
    }));
    s.Get("/v1/endpoints", http::guarded([this](const Req&, Res& res) {
      http::reply_json(res, json(serving_->endpoints()));
    }));
    s.Get(R"(/v1/endpoints/([^/]+))", http::guarded([this](const Req& req, Res& res) {
      http::reply_json(res, json(serving_->endpoint(req.matches[1])));
    }));
    s.Delete(R"(/v1/endpoints/([^/]+))", http::guarded([this](const Req& req, Res& res) {
      serving_->undeploy(req.matches[1]);
      http::reply_json(res, json{{"ok", true}});
    }));
    s.Post(R"(/v1/predict/([^/]+))", http::guarded([this](const Req& req, Res& res) {
      auto r = serving_->predict(req.matches[1], req.body);
      res.set_header("X-Replica", std::to_string(r.replica_id));
      res.set_header("X-Latency-Ms", format_double(r.latency_ms));
      res.set_content(r.body, "application/octet-stream");
    }));
  }
}

}  // namespace edgeflow
