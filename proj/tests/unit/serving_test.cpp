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

#include <doctest.h>

#include <atomic>
#include <future>
#include <random>
#include <thread>

#include "edgeflow/error.hpp"
#include "edgeflow/serving/serving.hpp"
#include "edgeflow/util/util.hpp"
#include "support.hpp"

using namespace edgeflow;
using edgeflow::testing::TempDir;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::io_error;
}

struct Stack {
  TempDir dir{"serving"};
  ObjectStore store{dir / "objects"};
  Registry registry{store, dir / "registry.log"};
  Cluster cluster{{3'600'000}};
  MetricStore metrics;
  ServingPlane plane;

  explicit Stack(int nodes = 4, int cores = 4, std::int64_t health_window_ms = 10'000)
      : plane(cluster, registry, store, &metrics, {dir / "scratch", health_window_ms}) {
    for (int i = 1; i <= nodes; ++i) {
      NodeInfo n;
      n.node_id = "node-" + std::to_string(i);
      n.cpu_cores = cores;
      cluster.register_node(n, now_ms());
    }
    registry.register_model("qoe", "weights-v1");
  }

  int allocated_cores() {
    int total = 0;
    for (const auto& n : cluster.nodes(now_ms())) total += n.allocated_cores;
    return total;
  }
};

DeployRequest synthetic(int replicas, double service_ms, ScalingConfig scaling = {}) {
  DeployRequest req;
  req.selector = ModelSelector::latest("qoe");
  scaling.min_replicas = replicas;
  scaling.max_replicas = std::max(scaling.max_replicas, replicas);
  req.scaling = scaling;
  req.replica.service_time_ms = service_ms;
  return req;
}

}  // namespace

TEST_CASE("autoscale decisions follow the stated policy") {
  AutoscaleInput in;
  in.current = 1;
  in.min_replicas = 1;
  in.max_replicas = 8;
  in.target_inflight = 2;
  in.avg_inflight = 8;
  auto up = autoscale_decide(in, 0);
  CHECK(up.action == ScaleAction::scale_up);
  CHECK(up.replicas == 4);

  in.max_replicas = 3;
  CHECK(autoscale_decide(in, 0).replicas == 3);

  in.current = 3;
  in.avg_inflight = 5.5;
  auto hold = autoscale_decide(in, 0);
  CHECK(hold.action == ScaleAction::hold);
  CHECK_FALSE(hold.below_since_ms);

  in.avg_inflight = 0;
  in.cooldown_ms = 5000;
  auto wait = autoscale_decide(in, 1000);
  CHECK(wait.action == ScaleAction::hold);
  CHECK(wait.replicas == 3);
  CHECK(wait.below_since_ms == 1000);
  in.below_since_ms = wait.below_since_ms;
  CHECK(autoscale_decide(in, 5999).action == ScaleAction::hold);
  auto down = autoscale_decide(in, 6000);
  CHECK(down.action == ScaleAction::scale_down);
  CHECK(down.replicas == 1);
  CHECK_FALSE(down.below_since_ms);
}

TEST_CASE("autoscaler keeps replicas in bounds and never shortcuts the cooldown") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    AutoscaleInput in;
    in.min_replicas = 1 + static_cast<int>(rng() % 3);
    in.max_replicas = in.min_replicas + static_cast<int>(rng() % 6);
    in.current = in.min_replicas;
    in.target_inflight = 0.5 + static_cast<double>(rng() % 8) / 2.0;
    in.cooldown_ms = static_cast<std::int64_t>(rng() % 3000);
    std::int64_t now = 0;
    for (int step = 0; step < 60; ++step) {
      now += 1 + static_cast<std::int64_t>(rng() % 500);
      in.avg_inflight = static_cast<double>(rng() % 40) / 2.0;
      auto d = autoscale_decide(in, now);
      CHECK(d.replicas >= in.min_replicas);
      CHECK(d.replicas <= in.max_replicas);
      if (d.action == ScaleAction::scale_down) {
        REQUIRE(in.below_since_ms);
        CHECK(now - *in.below_since_ms >= in.cooldown_ms);
      }
      in.current = d.replicas;
      in.below_since_ms = d.below_since_ms;
    }
  }
}

TEST_CASE("deploy places one core per replica and serves predictions") {
  Stack s;
  auto info = s.plane.deploy(synthetic(1, 1), now_ms());
  CHECK(info.version == 1);
  CHECK(info.replicas.size() == 1);
  CHECK(info.status == EndpointStatus::healthy);
  CHECK(s.allocated_cores() == 1);
  auto r = s.plane.predict("qoe", "{\"x\":1}");
  auto body = parse_json(r.body);
  CHECK(body.at("model") == "qoe");
  CHECK(body.at("version") == 1);
  CHECK(r.body.size() >= 64);
  CHECK(r.attempts == 1);
  CHECK(s.plane.predict("qoe", "{\"x\":1}").body == r.body);
  CHECK(s.metrics.latest("inference_latency_ms", {{"model", "qoe"}}).has_value());
  CHECK(s.metrics.latest("model_healthy", {{"model", "qoe"}})->value == 1.0);

  CHECK(code_of([&] { s.plane.predict("nope", "x"); }) == Errc::not_found);
  CHECK(code_of([&] { s.plane.deploy(DeployRequest{ModelSelector::latest("ghost"), {}, {}, {}}, now_ms()); }) ==
        Errc::not_found);
  s.plane.undeploy("qoe");
  CHECK(s.allocated_cores() == 0);
  CHECK(code_of([&] { s.plane.undeploy("qoe"); }) == Errc::not_found);
}

TEST_CASE("deploy that cannot place every replica is unschedulable and leaks nothing") {
  Stack s(1, 2);
  CHECK(code_of([&] { s.plane.deploy(synthetic(3, 1), now_ms()); }) == Errc::unschedulable);
  CHECK(s.allocated_cores() == 0);
  CHECK(s.plane.endpoints().empty());
  s.plane.deploy(synthetic(2, 1), now_ms());
  // A failed redeploy keeps the running endpoint.
  s.registry.register_model("qoe", "weights-v2");
  CHECK(code_of([&] { s.plane.deploy(synthetic(1, 1), now_ms()); }) == Errc::unschedulable);
  CHECK(s.plane.endpoint("qoe").version == 1);
  CHECK(s.allocated_cores() == 2);
  auto bad = synthetic(1, 1);
  bad.scaling.max_replicas = 0;
  CHECK(code_of([&] { s.plane.deploy(bad, now_ms()); }) == Errc::invalid_argument);
}

TEST_CASE("sequential requests spread evenly across idle replicas") {
  Stack s;
  s.plane.deploy(synthetic(2, 1), now_ms());
  for (int i = 0; i < 10; ++i) {
    s.plane.predict("qoe", std::to_string(i));
    for (const auto& r : s.plane.endpoint("qoe").replicas) CHECK(r.inflight == 0);
  }
  auto reps = s.plane.endpoint("qoe").replicas;
  CHECK(reps[0].served == 5);
  CHECK(reps[1].served == 5);

  Stack t;
  t.plane.deploy(synthetic(3, 0), now_ms());
  for (int i = 0; i < 100; ++i) t.plane.predict("qoe", "x");
  std::vector<std::uint64_t> served;
  for (const auto& r : t.plane.endpoint("qoe").replicas) served.push_back(r.served);
  CHECK(*std::max_element(served.begin(), served.end()) - *std::min_element(served.begin(), served.end()) <= 1);
}

TEST_CASE("concurrent requests are balanced within ten percent") {
  Stack s;
  s.plane.deploy(synthetic(4, 5), now_ms());
  std::vector<std::thread> clients;
  std::atomic<int> failures{0};
  for (int c = 0; c < 16; ++c) {
    clients.emplace_back([&] {
      for (int i = 0; i < 25; ++i) {
        try {
          s.plane.predict("qoe", "payload");
        } catch (const Error&) {
          ++failures;
        }
      }
    });
  }
  for (auto& t : clients) t.join();
  CHECK(failures == 0);
  auto reps = s.plane.endpoint("qoe").replicas;
  REQUIRE(reps.size() == 4);
  for (const auto& r : reps) {
    CHECK(r.inflight == 0);
    CHECK(static_cast<double>(r.served) >= 90.0);
    CHECK(static_cast<double>(r.served) <= 110.0);
  }
}

TEST_CASE("killing a replica under load drops no request and the autoscaler restores it") {
  Stack s;
  ScalingConfig fixed;
  fixed.max_replicas = 2;
  s.plane.deploy(synthetic(2, 60, fixed), now_ms());
  std::vector<std::future<PredictResult>> pending;
  for (int i = 0; i < 8; ++i) {
    pending.push_back(std::async(std::launch::async, [&] { return s.plane.predict("qoe", "x"); }));
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  s.plane.kill_replica("qoe", 1);
  int retried = 0;
  for (auto& f : pending) {
    auto r = f.get();
    CHECK(r.replica_id == 2);
    retried += r.attempts == 2;
  }
  CHECK(retried >= 1);
  auto info = s.plane.endpoint("qoe");
  CHECK(info.replicas.size() == 1);
  CHECK(info.errors == 0);
  s.plane.autoscale_cycle(now_ms());
  info = s.plane.endpoint("qoe");
  CHECK(info.replicas.size() == 2);
  CHECK(s.allocated_cores() == 2);
  CHECK(info.replicas[1].replica_id == 3);
  CHECK(code_of([&] { s.plane.kill_replica("qoe", 1); }) == Errc::not_found);
}

TEST_CASE("an endpoint with no live replica is unhealthy until it recovers") {
  Stack s(4, 4, 300);
  s.plane.deploy(synthetic(1, 1), now_ms());
  s.plane.kill_replica("qoe", 1);
  CHECK(code_of([&] { s.plane.predict("qoe", "x"); }) == Errc::no_live_replica);
  CHECK(s.plane.endpoint("qoe").status == EndpointStatus::unhealthy);

  s.plane.autoscale_cycle(now_ms());
  auto info = s.plane.endpoint("qoe");
  CHECK(info.replicas.size() == 1);
  CHECK(info.status == EndpointStatus::degraded);  // the failure is still in the window
  CHECK(s.metrics.latest("model_healthy", {{"model", "qoe"}})->value == 0.0);
  s.plane.predict("qoe", "x");

  std::this_thread::sleep_for(std::chrono::milliseconds(350));
  s.plane.autoscale_cycle(now_ms());
  CHECK(s.plane.endpoint("qoe").status == EndpointStatus::healthy);
  CHECK(s.metrics.latest("model_healthy", {{"model", "qoe"}})->value == 1.0);
}

TEST_CASE("a replica failing twice surfaces as ReplicaFailure") {
  Stack s;
  DeployRequest req = synthetic(2, 1);
  req.replica.kind = "process";
  req.replica.command = "python3 -c pass";
  s.plane.deploy(req, now_ms());
  CHECK(code_of([&] { s.plane.predict("qoe", "x"); }) == Errc::replica_failure);
  CHECK(s.plane.endpoint("qoe").errors == 1);
}

TEST_CASE("redeploy swaps versions without failing a request") {
  Stack s;
  s.plane.deploy(synthetic(2, 5), now_ms());
  s.registry.register_model("qoe", "weights-v2");
  std::atomic<bool> stop{false};
  std::atomic<int> ok{0}, failed{0};
  std::atomic<int> saw_v2{0};
  std::vector<std::thread> clients;
  for (int c = 0; c < 4; ++c) {
    clients.emplace_back([&] {
      while (!stop) {
        try {
          auto r = s.plane.predict("qoe", "x");
          ++ok;
          saw_v2 += parse_json(r.body).at("version") == 2;
        } catch (const Error&) {
          ++failed;
        }
      }
    });
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  auto info = s.plane.deploy(synthetic(3, 5), now_ms());
  CHECK(info.version == 2);
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  stop = true;
  for (auto& t : clients) t.join();
  CHECK(failed == 0);
  CHECK(ok > 20);
  CHECK(saw_v2 > 0);
  s.plane.autoscale_cycle(now_ms());
  info = s.plane.endpoint("qoe");
  CHECK(info.draining == 0);
  CHECK(info.replicas.size() == 3);
  CHECK(s.allocated_cores() == 3);
}

TEST_CASE("the autoscaler follows load up and back down after the cooldown") {
  Stack s;
  ScalingConfig sc;
  sc.max_replicas = 4;
  sc.target_inflight = 1;
  sc.cooldown_ms = 1000;
  s.plane.deploy(synthetic(1, 40, sc), now_ms());
  s.plane.autoscale_cycle(0);  // resets the load window
  std::vector<std::future<PredictResult>> burst;
  for (int i = 0; i < 8; ++i) {
    burst.push_back(std::async(std::launch::async, [&] { return s.plane.predict("qoe", "x"); }));
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(60));
  s.plane.autoscale_cycle(100);
  CHECK(s.plane.endpoint("qoe").replicas.size() == 4);
  for (auto& f : burst) f.get();
  CHECK(s.metrics.latest("endpoint_replicas", {{"model", "qoe"}})->value == 4.0);

  s.plane.autoscale_cycle(200);  // window still holds some load
  s.plane.autoscale_cycle(300);
  CHECK(s.plane.endpoint("qoe").replicas.size() == 4);
  s.plane.autoscale_cycle(1299);
  CHECK(s.plane.endpoint("qoe").replicas.size() == 4);
  s.plane.autoscale_cycle(1300);
  auto info = s.plane.endpoint("qoe");
  CHECK(info.replicas.size() == 1);
  CHECK(info.replicas[0].replica_id == 1);
  s.plane.autoscale_cycle(1400);
  CHECK(s.allocated_cores() == 1);
}

TEST_CASE("process replicas speak length-prefixed frames") {
  Stack s;
  auto script = edgeflow::testing::write_text(s.dir.path(), "serve.py", R"(import json, os, struct, sys
weights = open(sys.argv[-1], 'rb').read().decode()
assert os.environ['EDGEFLOW_MODEL_PATH'] == sys.argv[-1]
inp, out = sys.stdin.buffer, sys.stdout.buffer
count = 0
while True:
    head = inp.read(4)
    if len(head) < 4:
        break
    (n,) = struct.unpack('>I', head)
    req = inp.read(n)
    count += 1
    body = json.dumps({'weights': weights, 'echo': req.decode(), 'count': count}).encode()
    out.write(struct.pack('>I', len(body)) + body)
    out.flush()
)");
  DeployRequest req = synthetic(1, 0);
  req.replica.kind = "process";
  req.replica.command = "python3 " + script.string();
  s.plane.deploy(req, now_ms());
  for (int i = 1; i <= 3; ++i) {
    auto body = parse_json(s.plane.predict("qoe", "req-" + std::to_string(i)).body);
    CHECK(body.at("weights") == "weights-v1");
    CHECK(body.at("echo") == "req-" + std::to_string(i));
    CHECK(body.at("count") == i);  // one warm process
  }
  std::string big(200'000, 'z');
  CHECK(parse_json(s.plane.predict("qoe", big).body).at("echo") == big);
  CHECK(parse_json(s.plane.predict("qoe", "").body).at("echo") == "");
}
