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

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <queue>
#include <random>

#include "edgeflow/bench/experiments.hpp"
#include "edgeflow/bench/report.hpp"
#include "edgeflow/cluster/training.hpp"
#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"
#include "support.hpp"

using namespace edgeflow;
using namespace edgeflow::bench;
using edgeflow::testing::TempDir;
using Dec = boost::multiprecision::cpp_dec_float_50;

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

// Event simulation: each request goes to the server that frees up first.
double simulated_burst_latency(int concurrency, int replicas, double d) {
  std::priority_queue<double, std::vector<double>, std::greater<>> free_at;
  for (int r = 0; r < replicas; ++r) free_at.push(0.0);
  double total = 0;
  for (int i = 0; i < concurrency; ++i) {
    double start = free_at.top();
    free_at.pop();
    free_at.push(start + d);
    total += start + d;
  }
  return total / concurrency;
}

}  // namespace

TEST_CASE("speedup worked examples") {
  CHECK(theoretical_speedup(0, 40, 4, 16) == 4.0);
  CHECK(theoretical_speedup(1, 8, 4, 16) == 2.0);
  CHECK(theoretical_speedup(3.7, 11.2, 5, 5) == 1.0);
  CHECK(theoretical_speedup(5, 0, 1, 64) == 1.0);
  CHECK(code_of([] { theoretical_speedup(-1, 8, 4, 16); }) == Errc::invalid_argument);
  CHECK(code_of([] { theoretical_speedup(1, 8, 0, 16); }) == Errc::invalid_argument);
  CHECK(code_of([] { theoretical_speedup(0, 0, 1, 2); }) == Errc::invalid_argument);
}

TEST_CASE("speedup matches a 50-digit evaluation over random draws") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lat(0.0, 500.0);
  std::uniform_int_distribution<int> workers(1, 1024);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    double ls = lat(rng), lp = lat(rng);
    if (i % 10 == 0) ls = 0;
    int a = workers(rng), b = workers(rng);
    Dec exact = (Dec(ls) + Dec(lp) / a) / (Dec(ls) + Dec(lp) / b);
    double got = theoretical_speedup(ls, lp, a, b);
    worst = std::max(worst, static_cast<double>(boost::multiprecision::abs((Dec(got) - exact) / exact)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("amdahl fit recovers exact and perturbed decompositions") {
  std::vector<int> n = {1, 2, 4, 8, 16};
  std::vector<double> y;
  for (int k : n) y.push_back(3.0 + 40.0 / k);
  auto fit = fit_amdahl(n, y);
  CHECK(fit.l_serial == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.l_parallel == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(fit.max_rel_residual < 1e-12);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> noise(-0.02, 0.02);
  for (auto& v : y) v *= 1.0 + noise(rng);
  fit = fit_amdahl(n, y);
  CHECK(fit.l_parallel == doctest::Approx(40.0).epsilon(0.1));
  CHECK(fit.max_rel_residual < 0.05);

  CHECK(code_of([] { fit_amdahl({1}, {2.0}); }) == Errc::invalid_argument);
  CHECK(code_of([] { fit_amdahl({2, 2}, {1.0, 1.0}); }) == Errc::invalid_argument);
  CHECK(code_of([] { fit_amdahl({1, 2}, {1.0}); }) == Errc::invalid_argument);
}

TEST_CASE("predicted burst latency equals the event simulation") {
  for (int c = 1; c <= 130; c += 3) {
    for (int r : {1, 2, 3, 4, 7, 16}) {
      CHECK(predicted_burst_latency(c, r, 40.0) == doctest::Approx(simulated_burst_latency(c, r, 40.0)).epsilon(1e-12));
    }
  }
  double ratio = predicted_burst_latency(512, 4, 40) / predicted_burst_latency(512, 16, 40);
  // Mean rounds are (C/R + 1) / 2, so 4 vs 16 replicas at 512 gives 129/33.
  CHECK(ratio == doctest::Approx(129.0 / 33.0).epsilon(1e-12));
}

TEST_CASE("aggregation excludes failed repeats") {
  SweepReport r;
  r.experiment = "agg";
  r.var_names = {"x"};
  r.extra_names = {"e"};
  r.raw = {{{"b"}, 1, 2.0, false}, {{"a"}, 1, 1.0, false}, {{"b"}, 2, 4.0, false},
           {{"a"}, 2, 9.0, true},  {{"c"}, 1, 0.0, true}};
  aggregate(r);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].vars == std::vector<std::string>{"b"});
  CHECK(r.rows[0].stat.mean == 3.0);
  CHECK(r.rows[0].stat.stddev == doctest::Approx(std::sqrt(2.0)));
  CHECK(r.rows[0].repeats == 2);
  CHECK(r.rows[1].stat.mean == 1.0);
  CHECK(r.rows[1].stat.stddev == 0.0);
  CHECK(r.rows[1].repeats == 1);
  CHECK(r.rows[2].failed);
  CHECK(r.rows[2].repeats == 0);
  CHECK(r.rows[0].extras.size() == 1);
  CHECK(r.find({"a"}) == &r.rows[1]);
  CHECK(r.find({"z"}) == nullptr);
}

TEST_CASE("reports survive a CSV round trip") {
  SweepReport r;
  r.experiment = "roundtrip";
  r.var_names = {"name", "level"};
  r.measure = "latency_ms";
  r.extra_names = {"model_ms", "flag"};
  r.config = {{"service_ms", "40"}, {"note", "has, comma and \"quotes\""}};
  r.notes = {"first note", "second, with comma"};
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0, 1000);
  for (int rep = 1; rep <= 3; ++rep) {
    for (const char* name : {"plain", "a,b", "q\"x", "sp ace"}) {
      r.raw.push_back({{name, std::to_string(rep * 7)}, rep, u(rng) / 3.0, false});
    }
  }
  r.raw.push_back({{"dead", "1"}, 1, 0.0, true});
  aggregate(r);
  for (auto& row : r.rows) row.extras = {u(rng) * 1e-7, std::nan("")};
  auto back = parse_report(to_csv(r), to_raw_csv(r));
  CHECK(back == r);

  TempDir dir("bench");
  write_report(r, dir.path());
  auto again = parse_report(read_file(dir / "roundtrip.csv"), read_file(dir / "roundtrip.raw.csv"));
  CHECK(again == r);
  CHECK(read_file(dir / "roundtrip.csv").find("name,level,") != std::string::npos);
}

TEST_CASE("stage timing report sums each stage per run") {
  RunRecord a;
  a.state = RunState::succeeded;
  a.stage_timings = {{StageKind::data_extraction, 0, 100, "e"},
                     {StageKind::data_extraction, 100, 150, "e2"},
                     {StageKind::model_training, 150, 400, "t"},
                     {StageKind::other, 400, 410, "o"}};
  RunRecord b = a;
  b.stage_timings[2].end_ms = 600;
  auto r = stage_timing_report({a, b});
  auto* extract = r.find({"data_extraction"});
  REQUIRE(extract);
  CHECK(extract->stat.mean == 150.0);
  CHECK(extract->stat.stddev == 0.0);
  CHECK(r.find({"model_training"})->stat.mean == 350.0);
  CHECK(r.find({"model_deployment"})->stat.mean == 0.0);
  CHECK(r.find({"other"})->repeats == 2);
}

TEST_CASE("small concurrency sweep tracks the queueing model") {
  ConcurrencyOptions o;
  o.replicas = 2;
  o.service_ms = 20;
  o.levels = {1, 2, 4, 8};
  o.repeats = 2;
  auto r = run_concurrency_sweep(o);
  REQUIRE(r.rows.size() == 4);
  double prev = 0;
  for (const auto& row : r.rows) {
    CHECK_FALSE(row.failed);
    CHECK(row.repeats == 2);
    double model = r.extra(row, "model_ms");
    CHECK(row.stat.mean >= model * 0.95);
    CHECK(row.stat.mean <= model * 1.35 + 5);
    CHECK(row.stat.mean >= prev * 0.95);
    prev = row.stat.mean;
  }
}

TEST_CASE("small batch sweep stays within twenty percent of the cost model") {
  BatchSweepOptions o;
  o.samples = 400;
  o.batch_sizes = {50, 200};
  o.repeats = 1;
  auto r = run_batch_sweep(o);
  REQUIRE(r.rows.size() == 6);
  for (const auto& row : r.rows) {
    REQUIRE_FALSE(row.failed);
    double predicted = r.extra(row, "predicted_ms");
    CHECK(std::abs(row.stat.mean - predicted) <= 0.2 * predicted);
  }
  // 400 samples, B=50, 4 workers x 1 core, multi-node: 8 steps of 12.5 + 12.
  CHECK(r.extra(*r.find({"50", "4x1"}), "predicted_ms") == 196.0);

  BatchSweepOptions too_big = o;
  too_big.scenarios = {{"8x1", 8, 1, true}};
  auto skipped = run_batch_sweep(too_big);
  CHECK(skipped.rows[0].failed);
  REQUIRE(skipped.notes.size() == 1);
  CHECK(skipped.notes[0].find("8x1") != std::string::npos);
}

TEST_CASE("small scale study is near linear") {
  ScaleStudyOptions o;
  o.replicas = {1, 2, 4};
  o.concurrency = 40;
  o.service_ms = 10;
  o.repeats = 1;
  auto r = run_scale_study(o);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].stat.mean == 1.0);
  for (const auto& row : r.rows) {
    int replicas = std::stoi(row.vars[0]);
    CHECK(row.stat.mean >= 0.8 * replicas);
    CHECK(r.extra(row, "ideal_speedup") == replicas);
  }
  CHECK(r.extra(r.rows[1], "marginal") == 0.0);
}

TEST_CASE("deployment timing excludes failed bring-ups") {
  TempDir dir("deploy");
  auto fake = edgeflow::testing::write_text(dir.path(), "fake-cli.sh", R"(#!/bin/sh
case "$*" in
  *"cluster up"*"/work/deploy-2 "*) exit 1 ;;
  *"cluster up"*) sleep 0.05; exit 0 ;;
esac
exit 0
)");
  std::filesystem::permissions(fake, std::filesystem::perms::owner_all);
  DeployTimingOptions o;
  o.repeats = 4;
  o.cli = fake;
  o.work_root = dir / "work";
  auto r = run_deployment_timing(o);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].repeats == 3);
  CHECK(r.rows[0].stat.mean >= 50.0);
  CHECK(r.rows[0].stat.mean < 1000.0);
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0].find("1 bring-up") != std::string::npos);

  o.repeats = 1;
  o.work_root = dir / "single";
  auto one = run_deployment_timing(o);
  CHECK(one.rows[0].stat.stddev == 0.0);
}
