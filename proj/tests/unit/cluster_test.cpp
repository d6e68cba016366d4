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

#include <boost/multiprecision/cpp_int.hpp>
#include <random>
#include <set>

#include "edgeflow/cluster/cluster.hpp"
#include "edgeflow/cluster/training.hpp"
#include "edgeflow/error.hpp"

using namespace edgeflow;
using Rational = boost::multiprecision::cpp_rational;

namespace {

NodeInfo make_node(const std::string& id, int cores, int mem = 8192, Arch arch = Arch::x86_64) {
  NodeInfo n;
  n.node_id = id;
  n.cpu_cores = cores;
  n.memory_mb = mem;
  n.arch = arch;
  return n;
}

TaskSpec plain_task(int cores, int mem = 256, Arch arch = Arch::any) {
  TaskSpec t;
  t.name = "t";
  t.resources = {cores, mem, arch};
  return t;
}

TaskSpec train_task(int workers, int cores_per_worker, bool multi_node) {
  TaskSpec t;
  t.name = "train";
  t.kind = TaskKind::train_distributed;
  t.params = {{"worker_count", std::to_string(workers)},
              {"cores_per_worker", std::to_string(cores_per_worker)},
              {"multi_node", multi_node ? "true" : "false"}};
  t.resources.memory_mb = 128;
  return t;
}

std::string unschedulable_constraint(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const UnschedulableError& e) {
    CHECK(e.code() == Errc::unschedulable);
    return e.constraint();
  }
  FAIL("expected Unschedulable");
  return {};
}

// Exact total in ms for integer inputs: ceil(N/B) * epochs * (B*c/(W*p)*speed + s*[sync]).
Rational oracle_total(std::int64_t n, std::int64_t b, int w, int p, bool multi, std::int64_t c, std::int64_t s,
                      int epochs, Rational speed = 1) {
  std::int64_t steps = 0;
  for (std::int64_t done = 0; done < n; done += b) ++steps;
  Rational per_step = Rational(b * c, static_cast<std::int64_t>(w) * p) * speed;
  if (multi && w > 1) per_step += s;
  return per_step * steps * epochs;
}

TrainingPlan plan_of(std::int64_t n, std::int64_t b, int w, int p, bool multi, double c = 1.0, double s = 12.0) {
  TrainingPlan plan;
  plan.samples = n;
  plan.batch_size = b;
  plan.workers = w;
  plan.cores_per_worker = p;
  plan.multi_node = multi;
  plan.compute_ms_per_sample = c;
  plan.sync_ms = s;
  return plan;
}

}  // namespace

TEST_CASE("liveness follows the heartbeat window") {
  Cluster c({2000});
  c.register_node(make_node("a", 4), 0);
  CHECK(c.is_live("a", 1999));
  CHECK_FALSE(c.is_live("a", 2000));
  c.heartbeat("a", 1500);
  CHECK(c.is_live("a", 3499));
  CHECK_FALSE(c.is_live("a", 3500));
  CHECK(c.sweep(3000).empty());
  CHECK(c.sweep(3500) == std::vector<std::string>{"a"});
  CHECK(c.sweep(4000).empty());  // reported once
  CHECK_THROWS_AS(c.heartbeat("ghost", 0), Error);
}

TEST_CASE("four registered nodes are all seen live") {
  Cluster c;
  for (int i = 1; i <= 4; ++i) c.register_node(make_node("n" + std::to_string(i), 4), 100);
  CHECK(c.live_nodes(200).size() == 4);
}

TEST_CASE("live nodes cannot be re-registered, dead ones can") {
  Cluster c({2000});
  c.register_node(make_node("a", 4), 0);
  try {
    c.register_node(make_node("a", 4), 100);
    FAIL("expected DuplicateNode");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::duplicate_node);
  }
  c.register_node(make_node("a", 8), 5000);
  CHECK(c.node("a", 5000)->cpu_cores == 8);
}

TEST_CASE("placement picks the node with the most free cores, ties by id") {
  Cluster c;
  c.register_node(make_node("b", 4), 0);
  c.register_node(make_node("a", 4), 0);
  c.register_node(make_node("c", 2), 0);
  auto p1 = c.place_task(plain_task(1), 1);
  CHECK(p1[0].node_id == "a");
  auto p2 = c.place_task(plain_task(1), 1);
  CHECK(p2[0].node_id == "b");
  auto p3 = c.place_task(plain_task(3), 1);
  CHECK(p3[0].node_id == "a");
  CHECK(c.node("a", 1)->allocated_cores == 4);
}

TEST_CASE("unschedulable reports the binding constraint") {
  Cluster c;
  CHECK(unschedulable_constraint([&] { c.place_task(plain_task(1), 0); }) == "nodes");
  c.register_node(make_node("x1", 2), 0);
  c.register_node(make_node("x2", 2), 0);
  CHECK(unschedulable_constraint([&] { c.place_task(plain_task(4), 1); }) == "cpu");
  CHECK(unschedulable_constraint([&] { c.place_task(plain_task(1, 256, Arch::arm64), 1); }) == "arch");
  CHECK(unschedulable_constraint([&] { c.place_task(plain_task(1, 100000), 1); }) == "memory");
  // Dead nodes do not count.
  CHECK(unschedulable_constraint([&] { c.place_task(plain_task(1), 10000); }) == "nodes");
}

TEST_CASE("multi-node training places one worker per distinct node") {
  Cluster c;
  for (int i = 1; i <= 4; ++i) {
    auto n = make_node("n" + std::to_string(i), 2, 8192, i == 1 ? Arch::x86_64 : Arch::arm64);
    c.register_node(n, 0);
  }
  // Leave exactly one free core on each node.
  std::vector<Placement> filler;
  for (int i = 0; i < 4; ++i) filler.push_back(c.place_task(plain_task(1), 1)[0]);
  auto p = c.place_task(train_task(4, 1, true), 1);
  REQUIRE(p.size() == 4);
  std::set<std::string> nodes;
  for (const auto& x : p) nodes.insert(x.node_id);
  CHECK(nodes.size() == 4);
  for (const auto& n : c.nodes(1)) CHECK(n.free_cores() == 0);

  // A fifth worker has nowhere to go; nothing stays reserved.
  c.release(p);
  c.release(filler);
  CHECK(unschedulable_constraint([&] { c.place_task(train_task(5, 1, true), 1); }) == "nodes");
  for (const auto& n : c.nodes(1)) CHECK(n.allocated_cores == 0);
}

TEST_CASE("co-located training reserves W*p cores on one node") {
  Cluster c;
  c.register_node(make_node("big", 4), 0);
  c.register_node(make_node("small", 2), 0);
  auto p = c.place_task(train_task(2, 2, false), 1);
  REQUIRE(p.size() == 1);
  CHECK(p[0].node_id == "big");
  CHECK(p[0].cores == 4);
  CHECK(unschedulable_constraint([&] { c.place_task(train_task(3, 1, false), 1); }) == "cpu");
}

TEST_CASE("release is idempotent") {
  Cluster c;
  c.register_node(make_node("a", 4), 0);
  auto p = c.place_task(plain_task(3), 1);
  c.release(p);
  c.release(p);
  CHECK(c.node("a", 1)->allocated_cores == 0);
}

TEST_CASE("reservations never exceed capacity under random interleavings") {
  std::mt19937 rng(77);
  Cluster c;
  std::map<std::string, std::pair<int, int>> capacity;
  for (int i = 0; i < 5; ++i) {
    auto id = "n" + std::to_string(i);
    int cores = 1 + static_cast<int>(rng() % 8);
    int mem = 512 * (1 + static_cast<int>(rng() % 8));
    c.register_node(make_node(id, cores, mem, i % 2 ? Arch::arm64 : Arch::x86_64), 0);
    capacity[id] = {cores, mem};
  }
  std::vector<std::vector<Placement>> held;
  for (int op = 0; op < 3000; ++op) {
    if (!held.empty() && rng() % 2) {
      auto idx = rng() % held.size();
      c.release(held[idx]);
      held.erase(held.begin() + static_cast<long>(idx));
    } else {
      TaskSpec t = rng() % 4 == 0 ? train_task(1 + static_cast<int>(rng() % 4), 1 + static_cast<int>(rng() % 2), rng() % 2)
                                  : plain_task(1 + static_cast<int>(rng() % 4), 64 * (1 + static_cast<int>(rng() % 16)),
                                               static_cast<Arch>(rng() % 3));
      try {
        held.push_back(c.place_task(t, 1));
      } catch (const UnschedulableError&) {
      }
    }
    std::map<std::string, std::pair<int, int>> expected;
    for (const auto& ps : held)
      for (const auto& p : ps) {
        expected[p.node_id].first += p.cores;
        expected[p.node_id].second += p.memory_mb;
      }
    for (const auto& n : c.nodes(1)) {
      CHECK(n.allocated_cores <= capacity[n.node_id].first);
      CHECK(n.allocated_memory_mb <= capacity[n.node_id].second);
      CHECK(n.allocated_cores == expected[n.node_id].first);
      CHECK(n.allocated_memory_mb == expected[n.node_id].second);
    }
  }
}

TEST_CASE("training cost model worked examples") {
  CHECK(simulate_training_time(plan_of(1000, 16, 4, 1, true)) == 1008.0);
  CHECK(simulate_training_time(plan_of(1000, 16, 1, 1, false)) == 1008.0);
  CHECK(simulate_training_time(plan_of(1000, 512, 4, 1, true)) == 280.0);
  CHECK(simulate_training_time(plan_of(1000, 512, 1, 4, false)) == 256.0);
  // Co-located workers never pay the sync term.
  CHECK(simulate_training_time(plan_of(1000, 16, 4, 1, false)) == 252.0);
  // Speed scales compute only.
  CHECK(simulate_training_time(plan_of(1000, 16, 4, 1, true), 1.4) == doctest::Approx(63 * (4 * 1.4 + 12)));
}

TEST_CASE("training cost model matches an exact rational oracle") {
  std::mt19937 rng(5);
  for (int i = 0; i < 5000; ++i) {
    std::int64_t n = 1 + rng() % 5000;
    std::int64_t b = 1 + rng() % 600;
    int w = 1 + static_cast<int>(rng() % 8);
    int p = 1 + static_cast<int>(rng() % 4);
    bool multi = rng() % 2;
    std::int64_t c = 1 + rng() % 5;
    std::int64_t s = rng() % 30;
    int epochs = 1 + static_cast<int>(rng() % 3);
    auto plan = plan_of(n, b, w, p, multi, static_cast<double>(c), static_cast<double>(s));
    plan.epochs = epochs;
    double want = oracle_total(n, b, w, p, multi, c, s, epochs).convert_to<double>();
    CHECK(simulate_training_time(plan) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("single worker cost is ceil(N/B)*B*c, equal to N*c iff B divides N") {
  for (std::int64_t b = 1; b <= 200; ++b) {
    double t = simulate_training_time(plan_of(1000, b, 1, 1, true));
    CHECK(t >= 1000.0);
    CHECK((t == 1000.0) == (1000 % b == 0));
  }
}

TEST_CASE("multi-node cost is non-increasing in batch size and in total cores") {
  const std::int64_t n = 5040;  // many divisors
  std::vector<std::int64_t> divisors;
  for (std::int64_t b = 1; b <= n; ++b)
    if (n % b == 0) divisors.push_back(b);
  for (int w : {2, 3, 4, 8}) {
    double prev = 1e300;
    for (auto b : divisors) {
      double t = simulate_training_time(plan_of(n, b, w, 1, true));
      CHECK(t <= prev);
      prev = t;
    }
  }
  for (std::int64_t b : {8, 16, 64, 512}) {
    double prev = 1e300;
    for (int w = 2; w <= 8; ++w) {
      double t = simulate_training_time(plan_of(1000, b, w, 1, true));
      CHECK(t <= prev);
      prev = t;
    }
    prev = 1e300;
    for (int p = 1; p <= 6; ++p) {
      double t = simulate_training_time(plan_of(1000, b, 4, p, true));
      CHECK(t <= prev);
      prev = t;
    }
  }
}

TEST_CASE("at B = N distributed exceeds equal-core centralized by exactly one sync") {
  for (std::int64_t n : {100, 1000, 1029, 4096}) {
    for (int w : {2, 4, 8}) {
      double dist = simulate_training_time(plan_of(n, n, w, 1, true));
      double central = simulate_training_time(plan_of(n, n, 1, w, false));
      CHECK(dist - central == doctest::Approx(12.0));
    }
  }
}

TEST_CASE("distributed beats one core above batch 16 and loses below it") {
  for (std::int64_t b : {2, 4, 8}) {
    CHECK(simulate_training_time(plan_of(1000, b, 4, 1, true)) > simulate_training_time(plan_of(1000, b, 1, 1, false)));
  }
  for (std::int64_t b : {32, 64, 128, 256, 512}) {
    CHECK(simulate_training_time(plan_of(1000, b, 4, 1, true)) < simulate_training_time(plan_of(1000, b, 1, 1, false)));
  }
}

TEST_CASE("training params are parsed and validated") {
  auto t = train_task(4, 1, true);
  t.params["samples"] = "1029";
  t.params["batch_size"] = "10";
  t.params["sync_ms"] = "3.5";
  auto plan = training_plan(t);
  CHECK(plan.samples == 1029);
  CHECK(plan.steps() == 103);
  CHECK(plan.sync_ms == 3.5);
  CHECK(plan.syncs());
  t.params["batch_size"] = "0";
  CHECK_THROWS_AS(training_plan(t), Error);
  t.params["batch_size"] = "ten";
  CHECK_THROWS_AS(training_plan(t), Error);
  auto defaults = train_task(2, 1, false);
  defaults.params.erase("multi_node");
  CHECK(worker_layout(defaults).multi_node);
}

TEST_CASE("synthetic training wall time tracks the cost model") {
  for (auto plan : {plan_of(240, 24, 4, 1, true, 2.0, 12.0), plan_of(240, 24, 1, 4, false, 2.0, 12.0),
                    plan_of(120, 40, 2, 1, true, 4.0, 20.0)}) {
    double predicted = simulate_training_time(plan, 1.4);
    double measured = run_synthetic_training(plan, 1.4);
    CHECK_MESSAGE(std::abs(measured - predicted) <= 0.2 * predicted,
                  "measured " << measured << " predicted " << predicted);
  }
}
