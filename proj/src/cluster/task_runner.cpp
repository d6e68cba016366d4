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

#include "edgeflow/cluster/task_runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "edgeflow/cluster/training.hpp"
#include "edgeflow/error.hpp"
#include "edgeflow/util/process.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

namespace fs = std::filesystem;

std::string artifact_key(const std::string& cache_key, const std::string& output) {
  return cache_key.substr(0, 32) + "." + output;
}

namespace {

std::int64_t int_param(const TaskSpec& t, const std::string& key, std::int64_t fallback) {
  auto s = t.param(key, std::to_string(fallback));
  try {
    return std::stoll(s);
  } catch (const std::logic_error&) {
    throw Error(Errc::invalid_argument, "param " + key + " must be an integer");
  }
}

double double_param(const TaskSpec& t, const std::string& key, double fallback) {
  auto s = t.param(key, format_double(fallback));
  try {
    return std::stod(s);
  } catch (const std::logic_error&) {
    throw Error(Errc::invalid_argument, "param " + key + " must be a number");
  }
}

// Pseudo-random but reproducible bytes: SHA-256 in counter mode.
std::string expand_bytes(const std::string& seed, std::int64_t n) {
  std::string out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t block = 0; static_cast<std::int64_t>(out.size()) < n; ++block) {
    Sha256 h;
    h.field(seed).field(std::to_string(block));
    out += h.hex();
  }
  out.resize(static_cast<std::size_t>(n));
  return out;
}

void sleep_ms(double ms) {
  if (ms > 0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

std::map<std::string, std::string> fetch_inputs(const DispatchRequest& req, BlobStore& store) {
  std::map<std::string, std::string> out;
  for (const auto& in : req.inputs) {
    auto obj = store.get(in.ref.bucket, in.ref.key);
    if (obj.record.ref.digest != in.ref.digest) {
      throw Error(Errc::digest_mismatch, "input " + in.name + " changed since it was resolved");
    }
    out[in.name] = std::move(obj.bytes);
  }
  return out;
}

void run_builtin(const DispatchRequest& req, BlobStore& store, TaskResult& result) {
  const auto& t = req.task;
  if (req.attempt <= int_param(t, "fail_attempts", 0)) {
    throw Error(Errc::unavailable, "injected failure on attempt " + std::to_string(req.attempt));
  }
  auto inputs = fetch_inputs(req, store);
  std::int64_t input_bytes = 0;
  for (const auto& [_, b] : inputs) input_bytes += static_cast<std::int64_t>(b.size());

  auto t0 = steady_ms();
  sleep_ms(double_param(t, "duration_ms", 50.0) * req.speed);

  const auto generator = t.param("generator", "bytes");
  const auto size = int_param(t, "output_bytes", 1024);
  for (const auto& o : t.outputs) {
    std::string bytes;
    if (generator == "qoe") {
      auto seed = static_cast<std::uint64_t>(int_param(t, "seed", 7));
      bytes = synthetic_qoe_csv(int_param(t, "rows", 1029), seed);
    } else {
      bytes = expand_bytes(req.cache_key + "/" + o, size);
    }
    result.outputs[o] = store.put("artifacts", artifact_key(req.cache_key, o), bytes);
  }
  result.metrics["duration_ms"] = steady_ms() - t0;
  result.metrics["input_bytes"] = static_cast<double>(input_bytes);
}

void run_training(const DispatchRequest& req, BlobStore& store, TaskResult& result) {
  auto plan = training_plan(req.task);
  fetch_inputs(req, store);
  double measured = run_synthetic_training(plan, req.speed);

  std::uint64_t seed = req.cache_key.size() >= 16 ? std::stoull(req.cache_key.substr(0, 16), nullptr, 16) : 0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  json weights = json::array();
  for (int i = 0; i < 8; ++i) weights.push_back(dist(rng));
  json payload = {{"kind", "synthetic-linear"},
                  {"weights", weights},
                  {"plan",
                   {{"samples", plan.samples},
                    {"batch_size", plan.batch_size},
                    {"workers", plan.workers},
                    {"cores_per_worker", plan.cores_per_worker},
                    {"multi_node", plan.multi_node}}}};
  for (const auto& o : req.task.outputs) {
    result.outputs[o] = store.put("artifacts", artifact_key(req.cache_key, o), payload.dump());
  }
  result.metrics["train_ms"] = measured;
  result.metrics["predicted_ms"] = simulate_training_time(plan, req.speed);
  result.metrics["steps"] = static_cast<double>(plan.steps());
}

void run_external(const DispatchRequest& req, BlobStore& store, const RunnerOptions& opts,
                  TaskResult& result) {
  const auto& t = req.task;
  auto argv = split_command(t.param("command", ""));
  if (argv.empty()) throw Error(Errc::invalid_spec, "external-process task needs a command");

  fs::path scratch = opts.scratch_root / (req.run_id + "." + t.name + "." + std::to_string(req.attempt));
  fs::remove_all(scratch);
  fs::path in_dir = scratch / "inputs";
  fs::path out_dir = scratch / "outputs";
  fs::create_directories(in_dir);
  fs::create_directories(out_dir);
  struct Cleanup {
    const fs::path& dir;
    bool keep;
    ~Cleanup() {
      std::error_code ec;
      if (!keep) fs::remove_all(dir, ec);
    }
  } cleanup{scratch, opts.keep_scratch};

  TaskManifest manifest;
  manifest.task_name = t.name;
  manifest.params = t.params;
  manifest.output_dir = fs::absolute(out_dir).string();
  manifest.coordinator_url = opts.coordinator_url;
  for (auto& [name, bytes] : fetch_inputs(req, store)) {
    fs::path p = fs::absolute(in_dir / name);
    write_file_atomic(p, bytes);
    manifest.inputs.push_back({name, p.string()});
  }
  fs::path manifest_path = fs::absolute(scratch / "task_manifest.json");
  write_file_atomic(manifest_path, manifest_json(manifest).dump(2));

  argv.push_back(manifest_path.string());
  SpawnOptions so;
  so.env["EDGEFLOW_MANIFEST"] = manifest_path.string();
  so.cwd = scratch;
  so.stdout_file = scratch / "stdout.log";
  so.stderr_file = scratch / "stderr.log";
  auto timeout = std::chrono::milliseconds(int_param(t, "timeout_ms", 600'000));
  auto proc = run_process(argv, so, timeout);
  result.stderr_tail = proc.stderr_tail;

  if (proc.timed_out) {
    throw Error(Errc::timeout, "task " + t.name + " exceeded " + std::to_string(timeout.count()) + " ms");
  }
  if (proc.exit_code != 0) {
    result.error = "TaskFailed";
    result.message = "task " + t.name + " exited with code " + std::to_string(proc.exit_code);
    result.metrics["exit_code"] = proc.exit_code;
    return;
  }

  fs::path outputs_path = out_dir / "outputs.json";
  if (!fs::exists(outputs_path)) {
    throw Error(Errc::protocol_violation, "task " + t.name + " wrote no outputs.json");
  }
  auto parsed = parse_outputs_manifest(read_file(outputs_path));
  for (const auto& declared : t.outputs) {
    auto it = std::find_if(parsed.outputs.begin(), parsed.outputs.end(),
                           [&](const OutputEntry& e) { return e.name == declared; });
    if (it == parsed.outputs.end()) {
      throw Error(Errc::protocol_violation, "declared output '" + declared + "' missing from outputs.json");
    }
    fs::path p = it->path;
    if (p.is_relative()) p = out_dir / p;
    if (!fs::is_regular_file(p)) {
      throw Error(Errc::protocol_violation, "output '" + declared + "' path does not exist: " + p.string());
    }
    result.outputs[declared] = store.put("artifacts", artifact_key(req.cache_key, declared), read_file(p));
  }
  result.metrics = parsed.metrics;
}

}  // namespace

TaskResult execute_task(const DispatchRequest& request, BlobStore& store,
                        const RunnerOptions& options) {
  TaskResult result;
  result.run_id = request.run_id;
  result.task = request.task.name;
  result.attempt = request.attempt;
  result.node_id = options.node_id;
  result.start_ms = now_ms();
  try {
    switch (request.task.kind) {
      case TaskKind::builtin_synthetic:
        run_builtin(request, store, result);
        break;
      case TaskKind::train_distributed:
        run_training(request, store, result);
        break;
      case TaskKind::external_process:
        run_external(request, store, options, result);
        break;
      case TaskKind::deploy_model:
        throw Error(Errc::invalid_argument, "deploy-model tasks run on the coordinator");
    }
    result.ok = result.error.empty();
  } catch (const Error& e) {
    result.ok = false;
    result.error = errc_name(e.code());
    result.message = e.what();
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = "IoError";
    result.message = e.what();
  }
  if (!result.ok) result.outputs.clear();
  result.end_ms = now_ms();
  return result;
}

std::string synthetic_qoe_csv(std::int64_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> cell(1, 8);
  std::ostringstream out;
  out << "timestamp,ul_bytes,dl_bytes,throughput,cell_id\n";
  const std::int64_t t0 = 1'600'000'000'000;
  for (std::int64_t i = 0; i < rows; ++i) {
    double phase = static_cast<double>(i) / 48.0;
    double dl = std::max(0.0, 5e5 + 2e5 * std::sin(phase) + 4e4 * noise(rng));
    double ul = std::max(0.0, 0.2 * dl + 1e4 * noise(rng));
    double thr = std::max(0.0, (dl + ul) * 8.0 / 1e6 + 0.1 * noise(rng));
    out << t0 + i * 1000 << ',' << static_cast<std::int64_t>(ul) << ','
        << static_cast<std::int64_t>(dl) << ',' << format_double(thr) << ',' << cell(rng) << '\n';
  }
  return out.str();
}

}  // namespace edgeflow
