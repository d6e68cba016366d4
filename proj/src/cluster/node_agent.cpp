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

#include "edgeflow/cluster/node_agent.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "edgeflow/objstore/http.hpp"
#include "edgeflow/util/http.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

SystemGauges SystemSampler::sample() {
  SystemGauges g;
  std::ifstream stat("/proc/stat");
  std::string cpu;
  std::uint64_t user = 0, nice = 0, system = 0, idle = 0, iowait = 0, irq = 0, softirq = 0, steal = 0;
  if (stat >> cpu >> user >> nice >> system >> idle >> iowait >> irq >> softirq >> steal) {
    std::uint64_t total = user + nice + system + idle + iowait + irq + softirq + steal;
    std::uint64_t idle_all = idle + iowait;
    if (prev_total_ != 0 && total > prev_total_) {
      double dt = static_cast<double>(total - prev_total_);
      g.cpu_util = 1.0 - static_cast<double>(idle_all - prev_idle_) / dt;
    }
    prev_total_ = total;
    prev_idle_ = idle_all;
  }
  std::ifstream meminfo("/proc/meminfo");
  std::string key;
  std::uint64_t value = 0, total_kb = 0, avail_kb = 0;
  std::string unit;
  while (meminfo >> key >> value) {
    std::getline(meminfo, unit);
    if (key == "MemTotal:") total_kb = value;
    if (key == "MemAvailable:") avail_kb = value;
  }
  if (total_kb > avail_kb) g.mem_used_mb = static_cast<double>(total_kb - avail_kb) / 1024.0;
  return g;
}

NodeAgent::NodeAgent(NodeAgentOptions options) : options_(std::move(options)) {}

NodeAgent::~NodeAgent() {
  stop();
  if (server_thread_.joinable()) server_thread_.join();
  for (auto& t : tasks_) {
    if (t.joinable()) t.join();
  }
}

void NodeAgent::start() {
  server_ = std::make_unique<httplib::Server>();
  const std::string exec_path = "/v1/nodes/" + options_.node.node_id + "/exec";
  server_->Post(exec_path, http::guarded([this](const httplib::Request& req, httplib::Response& res) {
    auto request = parse_json(req.body).get<DispatchRequest>();
    {
      std::lock_guard lock(mu_);
      tasks_.emplace_back([this, request = std::move(request)]() mutable { execute(std::move(request)); });
    }
    http::reply_json(res, json{{"accepted", true}}, 202);
  }));
  server_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    http::reply_json(res, json{{"status", "ok"}});
  });
  int port = server_->bind_to_any_port("127.0.0.1");
  if (port <= 0) throw Error(Errc::io_error, "node agent could not bind a port");
  address_ = "http://127.0.0.1:" + std::to_string(port);
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });

  options_.node.address = address_;
  http::Client client(options_.coordinator_url, 5000);
  client.post_json("/v1/nodes/register", json(options_.node));
}

void NodeAgent::run() {
  http::Client client(options_.coordinator_url, 2000);
  SystemSampler sampler;
  sampler.sample();
  auto last_ok = steady_ms();
  std::unique_lock lock(mu_);
  while (!stopping_) {
    lock.unlock();
    auto g = sampler.sample();
    try {
      client.post_json("/v1/nodes/" + options_.node.node_id + "/heartbeat",
                       json{{"cpu_util", g.cpu_util}, {"mem_used_mb", g.mem_used_mb}});
      last_ok = steady_ms();
    } catch (const Error& e) {
      if (e.code() == Errc::not_found) {
        // Coordinator restarted and lost us; register again.
        try {
          client.post_json("/v1/nodes/register", json(options_.node));
          last_ok = steady_ms();
        } catch (const Error&) {
        }
      }
    }
    lock.lock();
    if (steady_ms() - last_ok > options_.orphan_timeout_ms) break;
    cv_.wait_for(lock, std::chrono::milliseconds(options_.heartbeat_ms), [&] { return stopping_; });
  }
}

void NodeAgent::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (server_) server_->stop();
}

void NodeAgent::execute(DispatchRequest request) {
  HttpBlobStore store(options_.coordinator_url);
  RunnerOptions opts;
  opts.scratch_root = options_.scratch_root;
  opts.node_id = options_.node.node_id;
  opts.coordinator_url = options_.coordinator_url;
  report(execute_task(request, store, opts));
}

void NodeAgent::report(const TaskResult& result) {
  http::Client client(options_.coordinator_url, 5000);
  for (int i = 0; i < 10; ++i) {
    try {
      client.post_json("/v1/nodes/" + options_.node.node_id + "/complete", json(result));
      return;
    } catch (const Error& e) {
      if (e.code() != Errc::unavailable) return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
}

RemoteDispatcher::RemoteDispatcher(Cluster& cluster) : cluster_(cluster) {}

RemoteDispatcher::~RemoteDispatcher() {
  std::vector<Sender> senders;
  {
    std::lock_guard lock(mu_);
    senders.swap(senders_);
  }
  for (auto& s : senders) s.thread.join();
}

void RemoteDispatcher::reap_locked() {
  std::erase_if(senders_, [](Sender& s) {
    if (!s.done->load()) return false;
    s.thread.join();
    return true;
  });
}

void RemoteDispatcher::dispatch(DispatchRequest request, CompletionSink sink) {
  const std::string node_id = request.placements.empty() ? "" : request.placements.front().node_id;
  auto node = cluster_.node(node_id, now_ms());
  Key key{request.run_id, request.task.name, request.attempt};
  std::lock_guard lock(mu_);
  reap_locked();
  pending_[key] = sink;
  std::string address = node ? node->address : "";
  auto done = std::make_shared<std::atomic<bool>>(false);
  auto thread = std::thread([this, done, address, node_id, request = std::move(request)] {
    struct Finish {
      std::atomic<bool>& flag;
      ~Finish() { flag = true; }
    } finish{*done};
    try {
      if (address.empty()) throw Error(Errc::unavailable, "node " + node_id + " has no address");
      http::Client client(address, 5000);
      client.post_json("/v1/nodes/" + node_id + "/exec", json(request));
    } catch (const Error& e) {
      TaskResult failed;
      failed.run_id = request.run_id;
      failed.task = request.task.name;
      failed.attempt = request.attempt;
      failed.node_id = node_id;
      failed.error = errc_name(e.code());
      failed.message = e.what();
      failed.start_ms = failed.end_ms = now_ms();
      complete(std::move(failed));
    }
  });
  senders_.push_back({std::move(thread), std::move(done)});
}

bool RemoteDispatcher::complete(TaskResult result) {
  CompletionSink sink;
  {
    std::lock_guard lock(mu_);
    auto it = pending_.find(Key{result.run_id, result.task, result.attempt});
    if (it == pending_.end()) return false;
    sink = std::move(it->second);
    pending_.erase(it);
  }
  sink(std::move(result));
  return true;
}

}  // namespace edgeflow
