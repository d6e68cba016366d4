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

#include <random>
#include <set>

#include "edgeflow/cluster/local_pool.hpp"
#include "edgeflow/core/workflow.hpp"
#include "edgeflow/error.hpp"
#include "edgeflow/orchestrator/orchestrator.hpp"
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

class BrokenMetrics : public MetricSource {
 public:
  std::optional<MetricSample> latest(const std::string&, const Labels&) override {
    throw Error(Errc::metric_store_unavailable, "metric store down");
  }
};

struct Harness {
  TempDir dir{"orch"};
  ObjectStore store{dir / "objects"};
  Cluster cluster;
  MetricStore metrics;
  LocalNodePool pool;
  Orchestrator orch;

  explicit Harness(std::int64_t liveness_ms = 2000, int nodes = 4, MetricSource* source = nullptr,
                   std::optional<std::filesystem::path> catalog = std::nullopt)
      : cluster({liveness_ms}),
        pool(cluster, store, RunnerOptions{dir / "scratch", "", "", false}),
        orch(cluster, store, source ? *source : metrics, pool, OrchestratorOptions{2, "", catalog}) {
    for (int i = 1; i <= nodes; ++i) {
      NodeInfo n;
      n.node_id = "node-" + std::to_string(i);
      n.cpu_cores = 4;
      n.arch = i == 1 ? Arch::x86_64 : Arch::arm64;
      n.speed = 1.0;
      pool.add_node(n, now_ms());
    }
  }

  ~Harness() { pool.wait_idle(); }

  // Ticks with wall-clock time until `done` holds.
  bool drive(const std::function<bool()>& done, std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
    auto deadline = steady_ms() + static_cast<double>(timeout.count());
    while (steady_ms() < deadline) {
      pool.pulse(now_ms());
      orch.tick(now_ms());
      if (done()) return true;
      orch.wait_for_work(std::chrono::milliseconds(10));
    }
    return false;
  }

  RunRecord run_to_end(const WorkflowId& id, const ParamOverrides& overrides = {}) {
    auto rec = orch.submit_run(id, overrides, now_ms());
    REQUIRE(drive([&] { return orch.run(rec.run_id)->terminal(); }));
    return *orch.run(rec.run_id);
  }
};

TaskSpec synth(const std::string& name, std::vector<std::string> deps = {}, int duration_ms = 5) {
  TaskSpec t;
  t.name = name;
  t.depends_on = std::move(deps);
  t.outputs = {"out"};
  t.params = {{"duration_ms", std::to_string(duration_ms)}, {"output_bytes", "64"}};
  return t;
}

WorkflowSpec chain_workflow(const std::string& name) {
  WorkflowSpec w;
  w.name = name;
  auto a = synth("extract");
  a.params["stage"] = "data_extraction";
  auto b = synth("train");
  b.kind = TaskKind::train_distributed;
  b.inputs = {ArtifactSelector{"extract", "out", "", "", "data"}};
  b.params = {{"samples", "40"}, {"batch_size", "20"}, {"worker_count", "2"}, {"cores_per_worker", "1"}};
  auto c = synth("report", {"train"});
  c.params["stage"] = "other";
  w.tasks = {a, b, c};
  return w;
}

}  // namespace

TEST_CASE("random DAGs never dispatch a task before its dependencies succeed") {
  Harness h;
  std::mt19937 rng(2024);
  std::vector<std::string> run_ids;
  std::map<std::string, WorkflowSpec> spec_of_run;
  for (int i = 0; i < 200; ++i) {
    WorkflowSpec w;
    w.name = "dag-" + std::to_string(i);
    int n = 1 + static_cast<int>(rng() % 10);
    for (int t = 0; t < n; ++t) {
      auto task = synth("t" + std::to_string(t), {}, static_cast<int>(rng() % 4));
      // Half the runs share params so the cache gets exercised too.
      if (i % 2) task.params["nonce"] = std::to_string(i);
      for (int d = 0; d < t; ++d) {
        if (rng() % 3 == 0) {
          if (rng() % 2) {
            task.depends_on.push_back("t" + std::to_string(d));
          } else {
            task.inputs.push_back(ArtifactSelector{"t" + std::to_string(d), "out", "", "", "in" + std::to_string(d)});
          }
        }
      }
      w.tasks.push_back(task);
    }
    h.orch.register_workflow(w, now_ms());
    auto rec = h.orch.submit_run(w.id(), {}, now_ms());
    run_ids.push_back(rec.run_id);
    spec_of_run[rec.run_id] = w;
    if (run_ids.size() % 25 == 0) {
      REQUIRE(h.drive([&] { return h.orch.active_runs() == 0; }, std::chrono::seconds(60)));
    }
  }
  REQUIRE(h.drive([&] { return h.orch.active_runs() == 0; }, std::chrono::seconds(60)));

  // First dispatch/cache-hit and first success of each (run, task).
  std::map<std::pair<std::string, std::string>, std::uint64_t> started, finished;
  for (const auto& e : h.orch.events()) {
    auto key = std::make_pair(e.run_id, e.task);
    if (e.kind == ActionKind::dispatched || e.kind == ActionKind::cache_hit) started.try_emplace(key, e.seq);
    if (e.kind == ActionKind::succeeded || e.kind == ActionKind::cache_hit) finished.try_emplace(key, e.seq);
  }
  for (const auto& id : run_ids) {
    auto rec = *h.orch.run(id);
    CHECK(rec.state == RunState::succeeded);
    for (const auto& t : spec_of_run[id].tasks) {
      auto key = std::make_pair(id, t.name);
      REQUIRE(started.count(key));
      for (const auto& d : t.dependencies()) {
        REQUIRE(finished.count({id, d}));
        CHECK(finished[{id, d}] <= started[key]);
      }
    }
  }
  for (const auto& id : run_ids) {
    auto rec = *h.orch.run(id);
    for (const auto& [task, attempts] : rec.attempts) CHECK(attempts <= 1);
  }
}

TEST_CASE("a rerun is served entirely from cache with identical artifacts") {
  Harness h;
  auto w = chain_workflow("cached");
  h.orch.register_workflow(w, now_ms());
  auto first = h.run_to_end(w.id());
  REQUIRE(first.state == RunState::succeeded);
  CHECK(first.cache_hits.empty());
  auto second = h.run_to_end(w.id());
  REQUIRE(second.state == RunState::succeeded);
  CHECK(second.cache_hits == std::set<std::string>{"extract", "train", "report"});
  CHECK(second.produced == first.produced);
  for (const auto& [task, outs] : second.produced)
    for (const auto& [name, ref] : outs) CHECK(h.store.get(ref.bucket, ref.key).record.ref.digest == ref.digest);

  // Changing one param invalidates that task. report only orders after it
  // without consuming its output, so its key is unchanged.
  auto third = h.run_to_end(w.id(), {{"train", {{"batch_size", "10"}}}});
  CHECK(third.cache_hits == std::set<std::string>{"extract", "report"});
  CHECK(third.produced.at("train") != first.produced.at("train"));
}

TEST_CASE("stage timings cover every executed task") {
  Harness h;
  auto w = chain_workflow("stages");
  h.orch.register_workflow(w, now_ms());
  auto rec = h.run_to_end(w.id());
  REQUIRE(rec.state == RunState::succeeded);
  std::set<StageKind> seen;
  for (const auto& st : rec.stage_timings) {
    CHECK(st.end_ms >= st.start_ms);
    CHECK(st.start_ms >= rec.submitted_ms);
    CHECK(st.end_ms <= rec.finished_ms);
    seen.insert(st.stage);
  }
  CHECK(seen.count(StageKind::data_extraction));
  CHECK(seen.count(StageKind::model_training));
  CHECK(seen.count(StageKind::other));
  CHECK(rec.task_metrics.at("train").at("steps") == 2.0);
}

TEST_CASE("failed attempts are retried up to the limit") {
  Harness h;
  WorkflowSpec w;
  w.name = "flaky";
  auto ok_after_two = synth("recovers");
  ok_after_two.params["fail_attempts"] = "2";
  w.tasks = {ok_after_two};
  h.orch.register_workflow(w, now_ms());
  auto rec = h.run_to_end(w.id());
  CHECK(rec.state == RunState::succeeded);
  CHECK(rec.attempts.at("recovers") == 3);

  WorkflowSpec w2;
  w2.name = "hopeless";
  auto never = synth("never");
  never.params["fail_attempts"] = "3";
  w2.tasks = {never, synth("after", {"never"})};
  h.orch.register_workflow(w2, now_ms());
  auto rec2 = h.run_to_end(w2.id());
  CHECK(rec2.state == RunState::failed);
  CHECK(rec2.attempts.at("never") == 3);
  CHECK(rec2.tasks.at("after") == TaskState::pending);
  CHECK(rec2.errors.at("never").find("Unavailable") != std::string::npos);
}

TEST_CASE("a missing object input fails the run without retrying") {
  Harness h;
  WorkflowSpec w;
  w.name = "needs-object";
  auto t = synth("read");
  t.inputs = {ArtifactSelector{"", "", "datasets", "absent.csv", "data"}};
  w.tasks = {t};
  h.orch.register_workflow(w, now_ms());
  auto rec = h.run_to_end(w.id());
  CHECK(rec.state == RunState::failed);
  CHECK(rec.errors.at("read").find("NotFound") != std::string::npos);

  h.store.put("datasets", "absent.csv", "now,present\n");
  CHECK(h.run_to_end(w.id()).state == RunState::succeeded);
}

TEST_CASE("killing a node mid-task requeues the task exactly once") {
  Harness h(300, 2);
  WorkflowSpec w;
  w.name = "long";
  w.tasks = {synth("slow", {}, 1500)};
  h.orch.register_workflow(w, now_ms());
  auto rec = h.orch.submit_run(w.id(), {}, now_ms());
  std::string victim;
  REQUIRE(h.drive([&] {
    auto r = h.orch.run(rec.run_id);
    return r->tasks.at("slow") == TaskState::running;
  }));
  for (const auto& n : h.cluster.nodes(now_ms()))
    if (n.allocated_cores > 0) victim = n.node_id;
  REQUIRE_FALSE(victim.empty());
  h.pool.kill(victim);
  REQUIRE(h.drive([&] { return h.orch.run(rec.run_id)->terminal(); }));
  auto done = *h.orch.run(rec.run_id);
  CHECK(done.state == RunState::succeeded);
  CHECK(done.attempts.at("slow") == 2);
  int requeues = 0;
  for (const auto& e : h.orch.events()) requeues += e.kind == ActionKind::requeued && e.run_id == rec.run_id;
  CHECK(requeues == 1);
  bool warned = false;
  for (const auto& msg : h.orch.warnings()) warned |= msg.find(victim) != std::string::npos;
  CHECK(warned);
  for (const auto& n : h.cluster.nodes(now_ms())) CHECK(n.allocated_cores == 0);
}

TEST_CASE("stale results for superseded attempts are ignored") {
  Harness h;
  WorkflowSpec w;
  w.name = "stale";
  w.tasks = {synth("slow", {}, 400)};
  h.orch.register_workflow(w, now_ms());
  auto rec = h.orch.submit_run(w.id(), {}, now_ms());
  REQUIRE(h.drive([&] { return h.orch.run(rec.run_id)->tasks.at("slow") == TaskState::running; }));
  TaskResult fake;
  fake.run_id = rec.run_id;
  fake.task = "slow";
  fake.attempt = 7;
  fake.ok = false;
  fake.error = "TaskFailed";
  h.orch.deliver(fake);
  h.orch.tick(now_ms());
  CHECK(h.orch.run(rec.run_id)->tasks.at("slow") == TaskState::running);
  CHECK(h.orch.run(rec.run_id)->errors.empty());
  REQUIRE(h.drive([&] { return h.orch.run(rec.run_id)->terminal(); }));
  CHECK(h.orch.run(rec.run_id)->state == RunState::succeeded);
}

TEST_CASE("overrides apply wildcard first, then per task, and are validated") {
  Harness h;
  WorkflowSpec w;
  w.name = "over";
  w.tasks = {synth("a"), synth("b")};
  h.orch.register_workflow(w, now_ms());
  auto rec = h.run_to_end(w.id(), {{"*", {{"output_bytes", "10"}}}, {"b", {{"output_bytes", "20"}}}});
  REQUIRE(rec.state == RunState::succeeded);
  CHECK(rec.produced.at("a").at("out").size_bytes == 10);
  CHECK(rec.produced.at("b").at("out").size_bytes == 20);
  CHECK(code_of([&] { h.orch.submit_run(w.id(), {{"zzz", {{"k", "v"}}}}, now_ms()); }) == Errc::invalid_argument);
  CHECK(code_of([&] { h.orch.submit_run(w.id(), {{"*", {{"stage", "bogus"}}}}, now_ms()); }) == Errc::invalid_spec);
}

TEST_CASE("workflow catalog rules") {
  TempDir dir("catalog");
  auto catalog = dir / "catalog.jsonl";
  {
    Harness h(2000, 1, nullptr, catalog);
    auto w = chain_workflow("cat");
    h.orch.register_workflow(w, now_ms());
    h.orch.register_workflow(w, now_ms());  // identical: no-op
    auto changed = w;
    changed.tasks[0].params["rows"] = "5";
    CHECK(code_of([&] { h.orch.register_workflow(changed, now_ms()); }) == Errc::invalid_spec);
    changed.version = 2;
    h.orch.register_workflow(changed, now_ms());
    CHECK(h.orch.latest_workflow("cat")->version == 2);
    CHECK(code_of([&] { h.orch.submit_run({"nope", 1}, {}, now_ms()); }) == Errc::unknown_workflow);
    auto bad = w;
    bad.name = "bad";
    bad.tasks[0].depends_on = {"report"};
    CHECK(code_of([&] { h.orch.register_workflow(bad, now_ms()); }) == Errc::invalid_spec);
  }
  Harness h(2000, 1, nullptr, catalog);
  CHECK(h.orch.workflows().size() == 2);
  CHECK(h.orch.workflow({"cat", 2})->tasks[0].params.at("rows") == "5");
}

TEST_CASE("interval schedules fire on their anchored cadence and skip missed fires") {
  Harness h;
  WorkflowSpec w;
  w.name = "nightly";
  w.tasks = {synth("a")};
  h.orch.register_workflow(w, 0);
  auto s = h.orch.add_schedule(w.id(), "@every 1s", 10'000);
  CHECK(s.next_fire_ms == 10'000);
  h.orch.tick(10'000);
  CHECK(h.orch.runs().size() == 1);
  h.orch.tick(10'999);
  CHECK(h.orch.runs().size() == 1);
  h.orch.tick(11'000);
  CHECK(h.orch.runs().size() == 2);
  h.orch.tick(14'200);  // 12s, 13s and 14s were due; one fire
  CHECK(h.orch.runs().size() == 3);
  CHECK(h.orch.schedules()[0].next_fire_ms == 15'000);
  CHECK(h.orch.schedules()[0].fires == 3);
  h.orch.set_schedule_enabled(s.id, false);
  h.orch.tick(20'000);
  CHECK(h.orch.runs().size() == 3);
  CHECK(code_of([&] { h.orch.add_schedule(w.id(), "whenever", 0); }) != Errc::io_error);
  CHECK(code_of([&] { h.orch.add_schedule({"ghost", 1}, "@every 1s", 0); }) == Errc::unknown_workflow);
}

TEST_CASE("a schedule declared in the workflow is installed at registration") {
  Harness h;
  WorkflowSpec w;
  w.name = "selfsched";
  w.schedule = "@every 2s";
  w.tasks = {synth("a")};
  h.orch.register_workflow(w, 1'000);
  REQUIRE(h.orch.schedules().size() == 1);
  CHECK(h.orch.schedules()[0].next_fire_ms == 1'000);
}

TEST_CASE("metric triggers fire only when the predicate holds") {
  Harness h;
  WorkflowSpec w;
  w.name = "retrain";
  w.tasks = {synth("a")};
  h.orch.register_workflow(w, 0);
  TriggerSpec t;
  t.metric_query = {"model_healthy", {{"model", "qoe"}}};
  t.op = PredicateOp::eq;
  t.threshold = 0;
  t.evaluation_cadence = "@every 1s";
  t.target_workflow = w.id();
  h.orch.add_trigger(t, 0);

  h.orch.tick(1'000);  // no samples yet
  CHECK(h.orch.runs().empty());
  bool warned = false;
  for (const auto& msg : h.orch.warnings()) warned |= msg.find("model_healthy") != std::string::npos;
  CHECK(warned);

  h.metrics.record("model_healthy", {{"model", "qoe"}, {"version", "3"}}, 1, 1'500);
  h.orch.tick(2'000);
  CHECK(h.orch.runs().empty());
  h.metrics.record("model_healthy", {{"model", "qoe"}, {"version", "3"}}, 0, 2'500);
  h.metrics.record("model_healthy", {{"model", "other"}}, 1, 2'600);
  h.orch.tick(3'000);
  CHECK(h.orch.runs().size() == 1);
  CHECK(h.orch.triggers()[0].fires == 1);
  CHECK(h.orch.triggers()[0].evaluations == 3);

  for (auto [op, threshold, value, expect] : std::vector<std::tuple<PredicateOp, double, double, bool>>{
           {PredicateOp::lt, 0.5, 0.4, true}, {PredicateOp::lt, 0.5, 0.5, false}, {PredicateOp::gt, 2, 3, true},
           {PredicateOp::gt, 2, 2, false},    {PredicateOp::ne, 1, 0, true},     {PredicateOp::ne, 1, 1, false}}) {
    h.metrics.record("probe", {}, value, now_ms());
    TriggerSpec p = t;
    p.metric_query = {"probe", {}};
    p.op = op;
    p.threshold = threshold;
    CHECK(h.orch.evaluate_trigger(p, now_ms()) == expect);
  }
}

TEST_CASE("an unavailable metric store skips the evaluation with a warning") {
  BrokenMetrics broken;
  Harness h(2000, 1, &broken);
  WorkflowSpec w;
  w.name = "retrain";
  w.tasks = {synth("a")};
  TriggerSpec t;
  t.metric_query = {"model_healthy", {}};
  t.evaluation_cadence = "@every 1s";
  w.trigger = t;
  h.orch.register_workflow(w, 0);
  REQUIRE(h.orch.triggers().size() == 1);
  CHECK(h.orch.triggers()[0].spec.target_workflow == w.id());
  CHECK_NOTHROW(h.orch.tick(1'000));
  CHECK(h.orch.runs().empty());
  CHECK(code_of([&] { h.orch.evaluate_trigger(t, 0); }) == Errc::metric_store_unavailable);
  bool warned = false;
  for (const auto& msg : h.orch.warnings()) warned |= msg.find("skipped") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("unschedulable tasks wait with a single warning") {
  Harness h(2000, 2);
  WorkflowSpec w;
  w.name = "huge";
  auto t = synth("big");
  t.resources.cpu_cores = 64;
  w.tasks = {t};
  h.orch.register_workflow(w, now_ms());
  auto rec = h.orch.submit_run(w.id(), {}, now_ms());
  for (int i = 0; i < 5; ++i) h.orch.tick(now_ms());
  CHECK(h.orch.run(rec.run_id)->state == RunState::pending);
  int warnings = 0;
  for (const auto& msg : h.orch.warnings()) warnings += msg.find("Unschedulable(cpu)") != std::string::npos;
  CHECK(warnings == 1);
}

TEST_CASE("local executors run on the coordinator without a placement") {
  Harness h(2000, 1);
  std::atomic<int> calls{0};
  h.orch.set_local_executor(TaskKind::deploy_model, [&](const DispatchRequest& req) {
    ++calls;
    CHECK(req.placements.empty());
    CHECK(req.inputs.size() == 1);
    TaskResult r;
    r.ok = true;
    r.metrics["model_version"] = 1;
    return r;
  });
  WorkflowSpec w;
  w.name = "ship";
  auto train = synth("train");
  train.outputs = {"model"};
  TaskSpec deploy;
  deploy.name = "deploy";
  deploy.kind = TaskKind::deploy_model;
  deploy.inputs = {ArtifactSelector{"train", "model", "", "", ""}};
  w.tasks = {train, deploy};
  h.orch.register_workflow(w, now_ms());
  auto rec = h.run_to_end(w.id());
  CHECK(rec.state == RunState::succeeded);
  CHECK(calls == 1);
  bool deployment_stage = false;
  for (const auto& st : rec.stage_timings) deployment_stage |= st.stage == StageKind::model_deployment;
  CHECK(deployment_stage);
}
