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

#include <algorithm>
#include <ctime>
#include <random>
#include <set>

#include "edgeflow/core/cadence.hpp"
#include "edgeflow/core/serialize.hpp"
#include "edgeflow/core/workflow.hpp"
#include "edgeflow/error.hpp"

using namespace edgeflow;

namespace {

TaskSpec task(const std::string& name, std::vector<std::string> deps = {}) {
  TaskSpec t;
  t.name = name;
  t.depends_on = std::move(deps);
  t.outputs = {"out"};
  return t;
}

WorkflowSpec workflow(std::vector<TaskSpec> tasks) {
  WorkflowSpec w;
  w.name = "wf";
  w.tasks = std::move(tasks);
  return w;
}

std::string name_of(int i) { return std::string(1, static_cast<char>('a' + i)); }

// Reachability by repeated relaxation; independent of the validator's DFS.
bool has_cycle_oracle(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<bool>> reach(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
  for (auto [from, to] : edges) reach[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] = true;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  for (int i = 0; i < n; ++i)
    if (reach[i][i]) return true;
  return false;
}

}  // namespace

TEST_CASE("linear chain is valid and ordered") {
  auto w = workflow({task("c", {"b"}), task("a"), task("b", {"a"})});
  CHECK(validate_workflow(w).ok());
  CHECK(topo_order(w) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("two-task cycle is reported with both members") {
  auto w = workflow({task("a", {"b"}), task("b", {"a"})});
  auto r = validate_workflow(w);
  REQUIRE(r.has(ViolationKind::cyclic_dag));
  auto v = *std::find_if(r.violations.begin(), r.violations.end(),
                         [](const Violation& x) { return x.kind == ViolationKind::cyclic_dag; });
  CHECK(v.names == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(require_valid(w), Error);
}

TEST_CASE("diamond with an edge to a missing task reports UnknownDependency(x)") {
  auto w = workflow({task("a"), task("b", {"a"}), task("c", {"a"}), task("d", {"b", "c"}), task("e", {"d"}),
                     task("f", {"e", "x"})});
  auto r = validate_workflow(w);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].kind == ViolationKind::unknown_dependency);
  CHECK(r.violations[0].names == std::vector<std::string>{"x"});
  CHECK(r.violations[0].task == "f");
}

TEST_CASE("diamond tie-break orders b before c") {
  auto w = workflow({task("d", {"c", "b"}), task("c", {"a"}), task("b", {"a"}), task("a")});
  CHECK(topo_order(w) == std::vector<std::string>{"a", "b", "c", "d"});
}

TEST_CASE("every violation is reported, not just the first") {
  auto w = workflow({task("a", {"ghost"}), task("a"), task("Bad")});
  w.tasks[1].outputs = {"x", "x"};
  auto r = validate_workflow(w);
  CHECK(r.has(ViolationKind::unknown_dependency));
  CHECK(r.has(ViolationKind::duplicate_task_name));
  CHECK(r.has(ViolationKind::invalid_field));
  CHECK(r.violations.size() >= 4);
}

TEST_CASE("train-distributed needs positive worker_count and cores_per_worker") {
  auto t = task("train");
  t.kind = TaskKind::train_distributed;
  CHECK_FALSE(validate_workflow(workflow({t})).ok());
  t.params = {{"worker_count", "4"}, {"cores_per_worker", "0"}};
  CHECK_FALSE(validate_workflow(workflow({t})).ok());
  t.params["cores_per_worker"] = "1";
  CHECK(validate_workflow(workflow({t})).ok());
}

TEST_CASE("input selectors add dependencies and must name declared outputs") {
  auto a = task("a");
  auto b = task("b");
  b.inputs = {ArtifactSelector{"a", "out", "", "", ""}};
  CHECK(b.dependencies() == std::vector<std::string>{"a"});
  CHECK(topo_order(workflow({b, a})) == std::vector<std::string>{"a", "b"});
  b.inputs[0].output = "nope";
  CHECK_FALSE(validate_workflow(workflow({a, b})).ok());
}

TEST_CASE("validator agrees with a brute-force checker on random graphs") {
  std::mt19937 rng(1234);
  for (int iter = 0; iter < 2000; ++iter) {
    int n = 1 + static_cast<int>(rng() % 8);
    std::vector<std::pair<int, int>> edges;  // producer -> consumer
    std::vector<TaskSpec> tasks;
    bool unknown = false;
    for (int i = 0; i < n; ++i) tasks.push_back(task(name_of(i)));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (rng() % 100 < 18) {
          tasks[static_cast<std::size_t>(i)].depends_on.push_back(name_of(j));
          edges.emplace_back(j, i);
        }
      }
      if (rng() % 100 < 4) {
        tasks[static_cast<std::size_t>(i)].depends_on.push_back("zz");
        unknown = true;
      }
    }
    bool cyclic = has_cycle_oracle(n, edges);
    auto r = validate_workflow(workflow(tasks));
    CHECK(r.ok() == (!cyclic && !unknown));
    CHECK(r.has(ViolationKind::cyclic_dag) == cyclic);
    CHECK(r.has(ViolationKind::unknown_dependency) == unknown);
    if (cyclic) {
      auto v = *std::find_if(r.violations.begin(), r.violations.end(),
                             [](const Violation& x) { return x.kind == ViolationKind::cyclic_dag; });
      // Each consecutive pair (and the wrap-around) must be a real edge.
      std::set<std::pair<std::string, std::string>> es;
      for (auto [p, c] : edges) es.insert({name_of(p), name_of(c)});
      for (std::size_t k = 0; k < v.names.size(); ++k) {
        CHECK(es.count({v.names[k], v.names[(k + 1) % v.names.size()]}) == 1);
      }
    }
  }
}

TEST_CASE("topo_order on random DAGs is a permutation, respects edges and picks the smallest ready name") {
  std::mt19937 rng(99);
  for (int iter = 0; iter < 500; ++iter) {
    int n = 1 + static_cast<int>(rng() % 10);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<TaskSpec> tasks;
    std::map<std::string, std::set<std::string>> deps;
    for (int i = 0; i < n; ++i) tasks.push_back(task(name_of(perm[static_cast<std::size_t>(i)])));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        if (rng() % 3 == 0) {
          tasks[static_cast<std::size_t>(i)].depends_on.push_back(tasks[static_cast<std::size_t>(j)].name);
          deps[tasks[static_cast<std::size_t>(i)].name].insert(tasks[static_cast<std::size_t>(j)].name);
        }
      }
    }
    std::shuffle(tasks.begin(), tasks.end(), rng);
    auto w = workflow(tasks);
    REQUIRE(validate_workflow(w).ok());
    auto order = topo_order(w);
    REQUIRE(order.size() == static_cast<std::size_t>(n));
    std::set<std::string> done;
    for (const auto& t : order) {
      for (const auto& d : deps[t]) CHECK(done.count(d) == 1);
      std::string smallest_ready;
      for (const auto& cand : tasks) {
        if (done.count(cand.name)) continue;
        bool ready = std::all_of(deps[cand.name].begin(), deps[cand.name].end(),
                                 [&](const std::string& d) { return done.count(d) == 1; });
        if (ready && (smallest_ready.empty() || cand.name < smallest_ready)) smallest_ready = cand.name;
      }
      CHECK(t == smallest_ready);
      done.insert(t);
    }
  }
}

TEST_CASE("cache_key is pure, canonical and sensitive") {
  auto t = task("train");
  t.kind = TaskKind::train_distributed;
  std::vector<ArtifactRef> inputs = {{"b", "k1", std::string(64, 'a'), 10}, {"b", "k2", std::string(64, 'c'), 5}};
  auto key = cache_key(t, inputs);
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(cache_key(t, inputs));
  CHECK(seen.size() == 1);
  CHECK(key.size() == 64);

  std::vector<ArtifactRef> swapped = {inputs[1], inputs[0]};
  CHECK(cache_key(t, swapped) == key);

  // Every insertion order of a 3-key map yields the same key.
  std::vector<std::pair<std::string, std::string>> kv = {{"a", "1"}, {"b", "2"}, {"c", "3"}};
  std::set<std::string> perm_keys;
  std::sort(kv.begin(), kv.end());
  do {
    TaskSpec p = t;
    p.params.clear();
    for (const auto& [k, v] : kv) p.params.emplace(k, v);
    perm_keys.insert(cache_key(p, inputs));
  } while (std::next_permutation(kv.begin(), kv.end()));
  CHECK(perm_keys.size() == 1);

  auto flipped = inputs;
  flipped[0].digest[63] = 'b';
  CHECK(cache_key(t, flipped) != key);
  auto p2 = t;
  p2.params["batch_size"] = "8";
  CHECK(cache_key(p2, inputs) != key);
  auto k2 = t;
  k2.kind = TaskKind::builtin_synthetic;
  CHECK(cache_key(k2, inputs) != key);
  // Ambiguous concatenations stay distinct.
  auto c1 = t, c2 = t;
  c1.params = {{"ab", "c"}};
  c2.params = {{"a", "bc"}};
  CHECK(cache_key(c1, inputs) != cache_key(c2, inputs));
}

TEST_CASE("workflow documents round-trip and enforce required fields") {
  auto w = workflow({task("a"), task("b", {"a"})});
  w.tasks[1].inputs = {ArtifactSelector{"a", "out", "", "", "data"}};
  w.tasks[1].params = {{"batch_size", "16"}};
  w.tasks[1].resources = {2, 512, Arch::arm64};
  w.schedule = "@every 1s";
  TriggerSpec trig;
  trig.metric_query = {"model_healthy", {{"model", "qoe"}}};
  trig.op = PredicateOp::eq;
  trig.threshold = 0;
  trig.target_workflow = {"wf", 1};
  w.trigger = trig;
  auto text = json(w).dump();
  CHECK(parse_workflow(text) == w);

  CHECK_THROWS_AS(parse_workflow(R"({"name":"x","tasks":[]})"), Error);
  try {
    parse_workflow(R"({"name":"x","tasks":[]})");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_spec);
  }
  CHECK_THROWS_AS(parse_workflow("{not json"), Error);
  // Numeric params are accepted and kept as strings.
  auto p = parse_workflow(R"({"name":"x","version":1,"tasks":[{"name":"t","kind":"builtin-synthetic","params":{"n":3}}]})");
  CHECK(p.tasks[0].params.at("n") == "3");
}

TEST_CASE("run records round-trip") {
  RunRecord r;
  r.run_id = "run-1";
  r.workflow = {"wf", 2};
  r.state = RunState::succeeded;
  r.tasks = {{"a", TaskState::succeeded}};
  r.stage_timings = {{StageKind::model_training, 10, 20, "a"}};
  r.produced["a"]["out"] = {"artifacts", "k.out", std::string(64, 'f'), 3};
  r.cache_hits = {"a"};
  r.attempts = {{"a", 1}};
  r.task_metrics["a"]["train_ms"] = 1.5;
  r.submitted_ms = 5;
  r.finished_ms = 25;
  auto back = json::parse(json(r).dump()).get<RunRecord>();
  CHECK(back.run_id == r.run_id);
  CHECK(back.tasks == r.tasks);
  CHECK(back.stage_timings == r.stage_timings);
  CHECK(back.produced == r.produced);
  CHECK(back.cache_hits == r.cache_hits);
  CHECK(back.task_metrics == r.task_metrics);
  CHECK(back.finished_ms == 25);
}

TEST_CASE("stage follows the task kind unless overridden") {
  auto t = task("x");
  CHECK(stage_for(t) == StageKind::data_extraction);
  t.kind = TaskKind::train_distributed;
  CHECK(stage_for(t) == StageKind::model_training);
  t.kind = TaskKind::deploy_model;
  CHECK(stage_for(t) == StageKind::model_deployment);
  t.params["stage"] = "data_extraction";
  CHECK(stage_for(t) == StageKind::data_extraction);
}

TEST_CASE("interval cadences are anchored") {
  auto c = Cadence::parse("@every 1s");
  REQUIRE(c);
  CHECK(c->is_interval());
  CHECK(c->next_after(5000, 5000) == 6000);
  CHECK(c->next_after(5999, 5000) == 6000);
  CHECK(c->next_after(6000, 5000) == 7000);
  CHECK(c->next_after(100, 5000) == 5000);
  CHECK(Cadence::parse("@every 2m")->interval_ms() == 120000);
  CHECK(Cadence::parse("@every 1h")->interval_ms() == 3600000);
  for (const char* bad : {"@every", "@every 0s", "@every 5x", "* * * *", "61 * * * *", "* * 0 * *", "*/0 * * * *",
                          "a b c d e"}) {
    CHECK_MESSAGE(!Cadence::parse(bad), bad);
  }
}

TEST_CASE("cron cadences match a minute-by-minute scan") {
  struct Fields {
    std::set<int> min, hour, dom, mon, dow;
    bool dom_star, dow_star;
  };
  auto expand = [](const std::string& f, int lo, int hi) {
    std::set<int> out;
    if (f == "*") {
      for (int i = lo; i <= hi; ++i) out.insert(i);
    } else if (f.rfind("*/", 0) == 0) {
      int step = std::stoi(f.substr(2));
      for (int i = lo; i <= hi; i += step) out.insert(i);
    } else if (f.find('-') != std::string::npos) {
      auto d = f.find('-');
      for (int i = std::stoi(f.substr(0, d)); i <= std::stoi(f.substr(d + 1)); ++i) out.insert(i);
    } else {
      std::size_t pos = 0;
      while (pos <= f.size()) {
        auto comma = f.find(',', pos);
        out.insert(std::stoi(f.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    }
    return out;
  };
  const std::vector<std::vector<std::string>> exprs = {
      {"*/15", "*", "*", "*", "*"}, {"0", "12", "*", "*", "*"},   {"30", "2", "1", "*", "*"},
      {"5", "*", "*", "*", "1"},    {"0", "0", "13", "*", "5"},   {"0,30", "9-17", "*", "*", "1-5"},
      {"7", "3", "29", "2", "*"},   {"0", "0", "*", "6", "0"},    {"45", "23", "31", "*", "*"},
  };
  std::mt19937_64 rng(5);
  for (const auto& e : exprs) {
    std::string text = e[0] + " " + e[1] + " " + e[2] + " " + e[3] + " " + e[4];
    auto c = Cadence::parse(text);
    REQUIRE_MESSAGE(c, text);
    Fields f{expand(e[0], 0, 59), expand(e[1], 0, 23), expand(e[2], 1, 31), expand(e[3], 1, 12),
             expand(e[4], 0, 6),  e[2] == "*",          e[4] == "*"};
    for (int trial = 0; trial < 4; ++trial) {
      // Random instant in 2024-2027.
      std::int64_t after = 1704067200000LL + static_cast<std::int64_t>(rng() % (4ULL * 365 * 86400 * 1000));
      std::int64_t t = (after / 60000 + 1) * 60000;
      for (int guard = 0; guard < 5 * 366 * 1440; ++guard, t += 60000) {
        std::time_t secs = t / 1000;
        std::tm tm{};
        gmtime_r(&secs, &tm);
        bool dom_ok = f.dom.count(tm.tm_mday) > 0;
        bool dow_ok = f.dow.count(tm.tm_wday) > 0;
        bool day = f.dom_star && f.dow_star ? true : f.dom_star ? dow_ok : f.dow_star ? dom_ok : (dom_ok || dow_ok);
        if (f.min.count(tm.tm_min) && f.hour.count(tm.tm_hour) && f.mon.count(tm.tm_mon + 1) && day) break;
      }
      CHECK_MESSAGE(c->next_after(after) == t, text);
    }
  }
  // Sunday may be written as 7.
  CHECK(Cadence::parse("0 0 * * 7")->next_after(0) == Cadence::parse("0 0 * * 0")->next_after(0));
}
