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

// edgeflow: command-line entry point for the whole system.
//
// Exit codes: 0 success, 1 user error (bad input, unknown names), 2 system
// error (unreachable services, timeouts, failed runs).

#include <CLI11.hpp>

#include <signal.h>
#include <unistd.h>

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <iostream>
#include <thread>

#include "edgeflow/bench/experiments.hpp"
#include "edgeflow/bench/report.hpp"
#include "edgeflow/cli/config.hpp"
#include "edgeflow/cluster/node_agent.hpp"
#include "edgeflow/coordinator/coordinator.hpp"
#include "edgeflow/error.hpp"
#include "edgeflow/util/http.hpp"
#include "edgeflow/util/process.hpp"
#include "edgeflow/util/util.hpp"

namespace fs = std::filesystem;
using namespace edgeflow;

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

void sleep_for_ms(std::int64_t ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }

struct Globals {
  bool json_out = false;
  std::string config;
  std::string url;
  std::string data_root;

  CliConfig resolve() const {
    auto cfg = load_cli_config(config.empty() ? std::nullopt : std::optional<fs::path>(config));
    if (!url.empty()) cfg.coordinator_url = url;
    if (!data_root.empty()) cfg.data_root = data_root;
    cfg.data_root = fs::absolute(cfg.data_root);
    return cfg;
  }
  std::string coordinator() const { return resolve_coordinator_url(resolve()); }
};

void emit(const Globals& g, const json& j, const std::function<void()>& human) {
  if (g.json_out) {
    std::cout << j.dump(2) << "\n";
  } else {
    human();
  }
}

bool process_alive(pid_t pid) {
  if (pid <= 0 || ::kill(pid, 0) != 0) return false;
  // Zombies still answer kill(0); nobody may reap them in a container.
  try {
    auto stat = read_file("/proc/" + std::to_string(pid) + "/stat");
    auto close = stat.rfind(')');
    if (close != std::string::npos && close + 2 < stat.size() && stat[close + 2] == 'Z') return false;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

std::string fmt(double v, int prec = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

void print_run(const RunRecord& r) {
  std::cout << "run " << r.run_id << "  " << r.workflow.name << " v" << r.workflow.version << "  "
            << to_string(r.state) << "\n";
  for (const auto& [task, state] : r.tasks) {
    std::cout << "  task " << task << ": " << to_string(state);
    if (auto a = r.attempts.find(task); a != r.attempts.end()) std::cout << " (attempts " << a->second << ")";
    if (r.cache_hits.count(task)) std::cout << " [cached]";
    if (auto e = r.errors.find(task); e != r.errors.end()) std::cout << " error: " << e->second;
    std::cout << "\n";
  }
  if (!r.stage_timings.empty()) {
    std::cout << "  stage timings:\n";
    for (const auto& st : r.stage_timings) {
      std::printf("    %-17s %-10s %8" PRId64 " ms\n", to_string(st.stage).c_str(), st.task.c_str(),
                  st.end_ms - st.start_ms);
    }
  }
}

void print_report(const bench::SweepReport& r) {
  std::cout << r.experiment << " (" << r.measure << ")\n";
  for (const auto& v : r.var_names) std::printf("%-12s ", v.c_str());
  std::printf("%12s %10s %3s", "mean", "stddev", "n");
  for (const auto& e : r.extra_names) std::printf(" %14s", e.c_str());
  std::printf("\n");
  for (const auto& row : r.rows) {
    for (const auto& v : row.vars) std::printf("%-12s ", v.c_str());
    std::printf("%12.3f %10.3f %3zu", row.stat.mean, row.stat.stddev, row.stat.n);
    for (double e : row.extras) std::printf(" %14.3f", e);
    if (row.failed) std::printf("  FAILED");
    std::printf("\n");
  }
  for (const auto& n : r.notes) std::cout << "note: " << n << "\n";
}

json report_summary(const bench::SweepReport& r, const fs::path& out) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j{{"vars", row.vars}, {"mean", row.stat.mean}, {"stddev", row.stat.stddev},
           {"n", row.stat.n},  {"failed", row.failed}};
    for (std::size_t i = 0; i < row.extras.size(); ++i) j[r.extra_names[i]] = row.extras[i];
    rows.push_back(j);
  }
  return json{{"experiment", r.experiment},
              {"var_names", r.var_names},
              {"measure", r.measure},
              {"rows", rows},
              {"csv", (out / (r.experiment + ".csv")).string()},
              {"raw_csv", (out / (r.experiment + ".raw.csv")).string()}};
}

int finish_bench(const Globals& g, const bench::SweepReport& r, const fs::path& out) {
  bench::write_report(r, out);
  emit(g, report_summary(r, out), [&] {
    print_report(r);
    std::cout << "wrote " << (out / (r.experiment + ".csv")).string() << "\n";
  });
  return 0;
}

// ---- cluster ----

int cluster_up(const Globals& g, std::optional<int> nodes, std::int64_t delay_ms, std::int64_t timeout_ms,
               std::optional<int> port) {
  auto cfg = g.resolve();
  if (nodes) cfg.node_count = *nodes;
  if (cfg.node_count < 1) throw Error(Errc::invalid_argument, "--nodes must be at least 1");
  const auto root = cfg.data_root;
  fs::create_directories(root);
  const auto marker = root / "coordinator.json";
  if (fs::exists(marker)) {
    auto info = parse_json(read_file(marker));
    if (process_alive(info.value("pid", 0))) {
      throw Error(Errc::invalid_argument, "a cluster is already running at " + info.value("url", std::string()));
    }
    fs::remove(marker);
  }

  std::vector<std::string> argv = {self_executable().string(), "cluster", "serve", "--data-root", root.string(),
                                   "--nodes", std::to_string(cfg.node_count), "--node-startup-delay-ms",
                                   std::to_string(delay_ms)};
  if (!g.config.empty()) argv.insert(argv.end(), {"--config", fs::absolute(g.config).string()});
  if (port) argv.insert(argv.end(), {"--port", std::to_string(*port)});
  SpawnOptions so;
  so.new_session = true;
  so.stdout_file = root / "cluster.log";
  so.stderr_file = root / "cluster.err.log";

  const double t0 = steady_ms();
  auto child = ChildProcess::spawn(argv, so);
  std::string url;
  int live = 0;
  while (true) {
    if (auto code = child.poll()) {
      throw Error(Errc::io_error, "cluster supervisor exited with code " + std::to_string(*code) + "; see " +
                                      so.stderr_file->string());
    }
    if (url.empty() && fs::exists(marker)) url = parse_json(read_file(marker)).at("url").get<std::string>();
    if (!url.empty()) {
      try {
        live = http::Client(url, 1000).get_json("/v1/health").at("nodes_live").get<int>();
      } catch (const Error&) {
        live = 0;
      }
      if (live >= cfg.node_count) break;
    }
    if (steady_ms() - t0 > static_cast<double>(timeout_ms)) {
      ::kill(-child.pid(), SIGKILL);
      throw Error(Errc::timeout, "cluster not ready after " + std::to_string(timeout_ms) + " ms (" +
                                     std::to_string(live) + " of " + std::to_string(cfg.node_count) +
                                     " nodes live)");
    }
    sleep_for_ms(20);
  }
  const double elapsed = steady_ms() - t0;
  const pid_t pid = child.release();
  emit(g, json{{"url", url}, {"nodes", cfg.node_count}, {"pid", pid}, {"bringup_ms", elapsed}}, [&] {
    std::cout << "cluster up at " << url << " with " << cfg.node_count << " nodes (" << fmt(elapsed, 0)
              << " ms)\n";
  });
  return 0;
}

int cluster_serve(const Globals& g, std::optional<int> nodes, std::int64_t delay_ms, std::optional<int> port) {
  auto cfg = g.resolve();
  if (nodes) cfg.node_count = *nodes;
  if (port) cfg.port = *port;
  ::signal(SIGTERM, on_signal);
  ::signal(SIGINT, on_signal);
  ::signal(SIGPIPE, SIG_IGN);

  CoordinatorOptions co;
  co.data_root = cfg.data_root;
  co.port = cfg.port;
  co.tick_ms = cfg.tick_ms;
  co.modules = cfg.modules;
  Coordinator coord(co);
  coord.start();

  fs::create_directories(cfg.data_root / "logs");
  std::vector<ChildProcess> agents;
  for (int i = 0; i < cfg.node_count; ++i) {
    auto n = local_node(cfg, i);
    SpawnOptions so;
    so.stdout_file = cfg.data_root / "logs" / (n.node_id + ".log");
    so.stderr_file = so.stdout_file;
    agents.push_back(ChildProcess::spawn(
        {self_executable().string(), "node", "--coordinator", coord.url(), "--id", n.node_id, "--arch",
         to_string(n.arch), "--cores", std::to_string(n.cpu_cores), "--memory-mb", std::to_string(n.memory_mb),
         "--speed", format_double(n.speed), "--scratch", (cfg.data_root / "nodes" / n.node_id).string(),
         "--startup-delay-ms", std::to_string(delay_ms)},
        so));
  }

  while (!coord.wait_for(std::chrono::milliseconds(100))) {
    if (g_stop) coord.stop();
  }
  for (auto& a : agents) a.signal(SIGTERM);
  for (auto& a : agents) a.wait_for(std::chrono::milliseconds(2000));
  agents.clear();
  std::error_code ec;
  fs::remove(cfg.data_root / "coordinator.json", ec);
  return 0;
}

int cluster_down(const Globals& g) {
  auto cfg = g.resolve();
  const auto marker = cfg.data_root / "coordinator.json";
  if (!fs::exists(marker)) {
    emit(g, json{{"stopped", false}, {"reason", "no cluster running"}},
         [] { std::cout << "no cluster running\n"; });
    return 0;
  }
  auto info = parse_json(read_file(marker));
  const pid_t pid = info.value("pid", 0);
  try {
    http::Client(info.at("url").get<std::string>(), 2000).post_json("/v1/admin/shutdown", json::object());
  } catch (const Error&) {
    if (pid > 0) ::kill(pid, SIGTERM);
  }
  const double t0 = steady_ms();
  while (process_alive(pid) && steady_ms() - t0 < 15'000) sleep_for_ms(20);
  if (pid > 0) {
    if (process_alive(pid)) ::kill(pid, SIGKILL);
    ::kill(-pid, SIGKILL);  // stragglers in the supervisor's process group
  }
  std::error_code ec;
  fs::remove(marker, ec);
  emit(g, json{{"stopped", true}, {"pid", pid}}, [] { std::cout << "cluster stopped\n"; });
  return 0;
}

int cluster_status(const Globals& g) {
  auto url = g.coordinator();
  http::Client client(url, 5000);
  auto nodes = client.get_json("/v1/nodes").get<std::vector<NodeInfo>>();
  int live = 0;
  for (const auto& n : nodes) live += n.live ? 1 : 0;
  emit(g, json{{"url", url}, {"live", live}, {"nodes", nodes}}, [&] {
    std::cout << "coordinator " << url << ": " << live << " of " << nodes.size() << " nodes live\n";
    for (const auto& n : nodes) {
      std::printf("  %-10s %-7s cores %d/%d  mem %d/%d MB  speed %.2f  %s\n", n.node_id.c_str(),
                  to_string(n.arch).c_str(), n.free_cores(), n.cpu_cores, n.free_memory_mb(), n.memory_mb, n.speed,
                  n.live ? "live" : "dead");
    }
  });
  return 0;
}

int run_node(const std::string& coordinator, const std::string& id, const std::string& arch, int cores,
             int memory_mb, std::optional<double> speed, const std::string& scratch, std::int64_t delay_ms,
             int heartbeat_ms) {
  ::signal(SIGPIPE, SIG_IGN);
  if (delay_ms > 0) sleep_for_ms(delay_ms);
  NodeAgentOptions o;
  o.coordinator_url = coordinator;
  o.node.node_id = id;
  o.node.arch = parse_arch(arch);
  o.node.cpu_cores = cores;
  o.node.memory_mb = memory_mb;
  o.node.speed = speed.value_or(default_speed(o.node.arch));
  o.scratch_root = scratch.empty() ? fs::temp_directory_path() / ("edgeflow-" + id) : fs::path(scratch);
  o.heartbeat_ms = heartbeat_ms;
  NodeAgent agent(o);
  agent.start();
  agent.run();
  return 0;
}

// ---- workflows ----

ParamOverrides parse_overrides(const std::vector<std::string>& items) {
  ParamOverrides out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(Errc::invalid_argument, "--param expects [task.]key=value, got '" + item + "'");
    }
    auto lhs = item.substr(0, eq);
    auto dot = lhs.find('.');
    std::string task = dot == std::string::npos ? "*" : lhs.substr(0, dot);
    std::string key = dot == std::string::npos ? lhs : lhs.substr(dot + 1);
    out[task][key] = item.substr(eq + 1);
  }
  return out;
}

int workflow_register(const Globals& g, const std::string& file) {
  if (!fs::exists(file)) throw Error(Errc::not_found, "workflow file " + file + " not found");
  auto text = read_file(file);
  http::Client client(g.coordinator());
  auto res = client.post("/v1/workflows", text);
  auto body = parse_json(http::Client::check(res, "register workflow").body);
  emit(g, body, [&] {
    std::cout << "registered " << body.at("name").get<std::string>() << " v" << body.at("version").get<int>() << "\n";
  });
  return 0;
}

int workflow_run(const Globals& g, const std::string& name, std::optional<int> version,
                 const std::vector<std::string>& params, bool wait, std::int64_t timeout_ms) {
  http::Client client(g.coordinator());
  json body{{"workflow", name}};
  if (version) body["version"] = *version;
  auto overrides = parse_overrides(params);
  if (!overrides.empty()) body["params"] = overrides;
  auto rec = client.post_json("/v1/runs", body).get<RunRecord>();
  if (!wait) {
    emit(g, json{{"run_id", rec.run_id}, {"state", to_string(rec.state)}},
         [&] { std::cout << rec.run_id << "\n"; });
    return 0;
  }
  const double t0 = steady_ms();
  while (!rec.terminal()) {
    if (steady_ms() - t0 > static_cast<double>(timeout_ms)) {
      throw Error(Errc::timeout, "run " + rec.run_id + " still " + to_string(rec.state) + " after " +
                                     std::to_string(timeout_ms) + " ms");
    }
    sleep_for_ms(100);
    rec = client.get_json("/v1/runs/" + rec.run_id).get<RunRecord>();
  }
  emit(g, json(rec), [&] { print_run(rec); });
  return rec.state == RunState::succeeded ? 0 : 2;
}

int workflow_status(const Globals& g, const std::string& run_id) {
  auto rec = http::Client(g.coordinator()).get_json("/v1/runs/" + http::url_encode(run_id)).get<RunRecord>();
  emit(g, json(rec), [&] { print_run(rec); });
  return 0;
}

int workflow_list(const Globals& g) {
  auto specs = http::Client(g.coordinator()).get_json("/v1/workflows").get<std::vector<WorkflowSpec>>();
  emit(g, json(specs), [&] {
    for (const auto& s : specs) {
      std::cout << s.name << " v" << s.version << "  (" << s.tasks.size() << " tasks)";
      if (s.schedule) std::cout << "  schedule " << *s.schedule;
      if (s.trigger) std::cout << "  trigger on " << s.trigger->metric_query.name;
      std::cout << "\n";
    }
  });
  return 0;
}

int workflow_schedule(const Globals& g, const std::string& name, const std::string& cadence) {
  auto entry = http::Client(g.coordinator()).post_json("/v1/schedules", json{{"workflow", name}, {"cadence", cadence}});
  emit(g, entry, [&] {
    std::cout << entry.at("id").get<std::string>() << ": " << name << " " << cadence << "\n";
  });
  return 0;
}

int workflow_trigger(const Globals& g, const std::string& file) {
  if (!fs::exists(file)) throw Error(Errc::not_found, "trigger file " + file + " not found");
  auto spec = parse_json(read_file(file)).get<TriggerSpec>();
  auto entry = http::Client(g.coordinator()).post_json("/v1/triggers", json(spec));
  emit(g, entry, [&] { std::cout << entry.at("id").get<std::string>() << "\n"; });
  return 0;
}

// ---- models and endpoints ----

int model_list(const Globals& g) {
  auto body = http::Client(g.coordinator()).get_json("/v1/models");
  emit(g, body, [&] {
    for (const auto& n : body.at("models")) std::cout << n.get<std::string>() << "\n";
  });
  return 0;
}

void print_model(const ModelRecord& m) {
  std::cout << m.name << " v" << m.version << "  stage " << to_string(m.stage) << "  " << m.payload.size_bytes
            << " bytes  sha256 " << m.payload.digest << "\n";
  for (const auto& [k, v] : m.metadata) std::cout << "  " << k << " = " << v << "\n";
}

int model_get(const Globals& g, const std::string& name, std::optional<int> version, const std::string& tag,
              const std::string& stage) {
  std::string path = "/v1/models/" + http::url_encode(name);
  if (version) {
    path += "/v" + std::to_string(*version);
  } else if (!tag.empty()) {
    path += "?tag=" + http::url_encode(tag);
  } else if (!stage.empty()) {
    path += "?stage=" + http::url_encode(stage);
  } else {
    path += "/latest";
  }
  auto body = http::Client(g.coordinator()).get_json(path);
  emit(g, body, [&] {
    if (body.is_array()) {
      for (const auto& m : body) print_model(m.get<ModelRecord>());
    } else {
      print_model(body.get<ModelRecord>());
    }
  });
  return 0;
}

int model_stage(const Globals& g, const std::string& name, int version, const std::string& stage) {
  auto body = http::Client(g.coordinator())
                  .post_json("/v1/models/" + http::url_encode(name) + "/v" + std::to_string(version) + "/stage",
                             json{{"stage", stage}});
  emit(g, body, [&] { print_model(body.get<ModelRecord>()); });
  return 0;
}

void print_endpoint(const json& e) {
  std::cout << e.at("model").get<std::string>() << " v" << e.at("version").get<int>() << "  "
            << e.at("status").get<std::string>() << "  replicas " << e.at("replicas").size() << "  error rate "
            << fmt(e.value("error_rate", 0.0) * 100, 2) << "%\n";
  for (const auto& r : e.at("replicas")) {
    std::cout << "  replica " << r.at("replica_id").get<int>() << " on " << r.at("node_id").get<std::string>()
              << "  inflight " << r.at("inflight").get<int>() << "  served " << r.at("served").get<std::uint64_t>()
              << "\n";
  }
}

int endpoint_deploy(const Globals& g, const std::string& model, std::optional<int> version, const json& scaling,
                    const json& replica) {
  json selector{{"name", model}};
  if (version) selector["version"] = *version;
  auto body = http::Client(g.coordinator(), 60'000)
                  .post_json("/v1/endpoints", json{{"selector", selector}, {"scaling", scaling}, {"replica", replica}});
  emit(g, body, [&] { print_endpoint(body); });
  return 0;
}

int endpoint_status(const Globals& g, const std::string& model) {
  http::Client client(g.coordinator());
  auto body = client.get_json(model.empty() ? "/v1/endpoints" : "/v1/endpoints/" + http::url_encode(model));
  emit(g, body, [&] {
    if (body.is_array()) {
      if (body.empty()) std::cout << "no endpoints\n";
      for (const auto& e : body) print_endpoint(e);
    } else {
      print_endpoint(body);
    }
  });
  return 0;
}

int endpoint_predict(const Globals& g, const std::string& model, const std::string& data) {
  http::Client client(g.coordinator());
  auto res = client.post("/v1/predict/" + http::url_encode(model), data, "application/octet-stream");
  const auto& r = http::Client::check(res, "predict");
  json out{{"body", r.body},
           {"replica", r.has_header("X-Replica") ? r.get_header_value("X-Replica") : ""},
           {"latency_ms", r.has_header("X-Latency-Ms") ? std::stod(r.get_header_value("X-Latency-Ms")) : 0.0}};
  emit(g, out, [&] { std::cout << r.body << "\n"; });
  return 0;
}

// ---- metrics ----

int metrics_query(const Globals& g, const std::string& name, std::optional<std::int64_t> from,
                  std::optional<std::int64_t> to, const std::vector<std::string>& labels) {
  std::string path = "/v1/metrics/query?name=" + http::url_encode(name);
  if (from) path += "&from=" + std::to_string(*from);
  if (to) path += "&to=" + std::to_string(*to);
  for (const auto& l : labels) {
    auto eq = l.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(Errc::invalid_argument, "--label expects key=value");
    path += "&label." + http::url_encode(l.substr(0, eq)) + "=" + http::url_encode(l.substr(eq + 1));
  }
  auto body = http::Client(g.coordinator()).get_json(path);
  emit(g, body, [&] {
    for (const auto& s : body.at("samples").get<std::vector<MetricSample>>()) {
      std::cout << s.ts_ms << "  " << format_double(s.value);
      for (const auto& [k, v] : s.labels) std::cout << "  " << k << "=" << v;
      std::cout << "\n";
    }
  });
  return 0;
}

int metrics_dump(const Globals& g) {
  http::Client client(g.coordinator());
  auto res = client.get("/v1/metrics");
  const auto& r = http::Client::check(res, "metrics dump");
  if (g.json_out) {
    std::cout << json(parse_exposition(r.body)).dump(2) << "\n";
  } else {
    std::cout << r.body;
  }
  return 0;
}

void add_globals(CLI::App& app, Globals& g) {
  app.add_flag("--json", g.json_out, "Machine-readable JSON output");
  app.add_option("--config", g.config, "Configuration file (default: $EDGEFLOW_CONFIG)");
  app.add_option("--url", g.url, "Coordinator URL (default: the running local cluster)");
  app.add_option("--data-root", g.data_root, "Local cluster state directory (default: .edgeflow)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgeflow: workflow orchestration and model serving for edge clusters"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  add_globals(app, g);
  std::function<int()> action;

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Local cluster lifecycle");
  cluster->require_subcommand(1);
  std::optional<int> up_nodes, up_port;
  std::int64_t up_delay = 0, up_timeout = 60'000;
  for (const char* name : {"up", "serve"}) {
    bool serve = std::string(name) == "serve";
    auto* sc = cluster->add_subcommand(name, serve ? "" : "Start a coordinator and node agents in the background");
    if (serve) sc->group("");
    sc->add_option("--nodes", up_nodes, "Node agents to start (default from config, 4)");
    sc->add_option("--node-startup-delay-ms", up_delay, "Delay before each node agent starts");
    sc->add_option("--port", up_port, "Coordinator port (default: any free port)");
    if (!serve) sc->add_option("--timeout-ms", up_timeout, "Give up if not ready within this time");
    sc->callback([&, serve] {
      action = serve ? std::function<int()>([&] { return cluster_serve(g, up_nodes, up_delay, up_port); })
                     : std::function<int()>([&] { return cluster_up(g, up_nodes, up_delay, up_timeout, up_port); });
    });
  }
  cluster->add_subcommand("down", "Stop the local cluster")->callback([&] {
    action = [&] { return cluster_down(g); };
  });
  cluster->add_subcommand("status", "List nodes and liveness")->callback([&] {
    action = [&] { return cluster_status(g); };
  });

  // node
  std::string node_coord, node_id = "node-1", node_arch = "x86_64", node_scratch;
  int node_cores = 4, node_mem = 8192, node_hb = 500;
  std::optional<double> node_speed;
  std::int64_t node_delay = 0;
  auto* node = app.add_subcommand("node", "Run a node agent in the foreground");
  node->add_option("--coordinator", node_coord, "Coordinator URL")->required();
  node->add_option("--id", node_id, "Node id");
  node->add_option("--arch", node_arch, "x86_64 or arm64");
  node->add_option("--cores", node_cores, "CPU cores offered");
  node->add_option("--memory-mb", node_mem, "Memory offered");
  node->add_option("--speed", node_speed, "Per-sample cost multiplier (default by arch)");
  node->add_option("--scratch", node_scratch, "Scratch directory for task attempts");
  node->add_option("--startup-delay-ms", node_delay, "Sleep before registering");
  node->add_option("--heartbeat-ms", node_hb, "Heartbeat interval");
  node->callback([&] {
    action = [&] {
      return run_node(node_coord, node_id, node_arch, node_cores, node_mem, node_speed, node_scratch, node_delay,
                      node_hb);
    };
  });

  // workflow
  auto* wf = app.add_subcommand("workflow", "Register and run workflows");
  wf->require_subcommand(1);
  std::string wf_file, wf_name, wf_run_id, wf_cadence;
  std::optional<int> wf_version;
  std::vector<std::string> wf_params;
  bool wf_wait = false;
  std::int64_t wf_timeout = 600'000;
  auto* reg = wf->add_subcommand("register", "Register a workflow file");
  reg->add_option("file", wf_file, "Workflow JSON")->required();
  reg->callback([&] { action = [&] { return workflow_register(g, wf_file); }; });
  auto* run = wf->add_subcommand("run", "Submit a run of a registered workflow");
  run->add_option("name", wf_name, "Workflow name")->required();
  run->add_option("--version", wf_version, "Workflow version (default: latest)");
  run->add_option("--param", wf_params, "Override [task.]key=value (repeatable)");
  run->add_flag("--wait", wf_wait, "Wait for the run to finish");
  run->add_option("--timeout-ms", wf_timeout, "Limit for --wait");
  run->callback([&] { action = [&] { return workflow_run(g, wf_name, wf_version, wf_params, wf_wait, wf_timeout); }; });
  auto* status = wf->add_subcommand("status", "Show a run with its stage timings");
  status->add_option("run_id", wf_run_id, "Run id")->required();
  status->callback([&] { action = [&] { return workflow_status(g, wf_run_id); }; });
  wf->add_subcommand("list", "List registered workflows")->callback([&] { action = [&] { return workflow_list(g); }; });
  wf->add_subcommand("example", "Print the bundled QoE example workflow")->callback([&] {
    action = [] {
      std::cout << example_workflow_json();
      return 0;
    };
  });
  auto* sched = wf->add_subcommand("schedule", "Run a workflow on a cadence (\"@every 10s\" or cron)");
  sched->add_option("name", wf_name, "Workflow name")->required();
  sched->add_option("cadence", wf_cadence, "Cadence")->required();
  sched->callback([&] { action = [&] { return workflow_schedule(g, wf_name, wf_cadence); }; });
  auto* trig = wf->add_subcommand("trigger", "Install a metric trigger from a JSON file");
  trig->add_option("file", wf_file, "Trigger JSON")->required();
  trig->callback([&] { action = [&] { return workflow_trigger(g, wf_file); }; });

  // model
  auto* model = app.add_subcommand("model", "Model registry");
  model->require_subcommand(1);
  std::string m_name, m_tag, m_stage;
  std::optional<int> m_version;
  int m_stage_version = 0;
  model->add_subcommand("list", "List model names")->callback([&] { action = [&] { return model_list(g); }; });
  auto* mget = model->add_subcommand("get", "Show a model version");
  mget->add_option("name", m_name, "Model name")->required();
  mget->add_option("--version", m_version, "Version (default: latest)");
  mget->add_option("--tag", m_tag, "Resolve by tag");
  mget->add_option("--stage", m_stage, "Resolve by stage");
  mget->callback([&] { action = [&] { return model_get(g, m_name, m_version, m_tag, m_stage); }; });
  auto* mstage = model->add_subcommand("stage", "Move a version to none|staging|production|archived");
  mstage->add_option("name", m_name, "Model name")->required();
  mstage->add_option("version", m_stage_version, "Version")->required();
  mstage->add_option("stage", m_stage, "Stage")->required();
  mstage->callback([&] { action = [&] { return model_stage(g, m_name, m_stage_version, m_stage); }; });

  // endpoint
  auto* ep = app.add_subcommand("endpoint", "Model serving endpoints");
  ep->require_subcommand(1);
  std::string e_model, e_kind = "synthetic", e_command, e_data = "{}";
  std::optional<int> e_version;
  int e_min = 1, e_max = 4;
  double e_target = 2.0, e_service = 20.0;
  std::int64_t e_cooldown = 5000;
  auto* deploy = ep->add_subcommand("deploy", "Deploy or redeploy a model endpoint");
  deploy->add_option("model", e_model, "Model name")->required();
  deploy->add_option("--version", e_version, "Model version (default: latest)");
  deploy->add_option("--min", e_min, "Minimum replicas");
  deploy->add_option("--max", e_max, "Maximum replicas");
  deploy->add_option("--target-inflight", e_target, "Autoscaler target in-flight requests per replica");
  deploy->add_option("--cooldown-ms", e_cooldown, "Scale-down cooldown");
  deploy->add_option("--service-ms", e_service, "Synthetic replica service time");
  deploy->add_option("--kind", e_kind, "synthetic or process");
  deploy->add_option("--command", e_command, "Serve-mode command for process replicas");
  deploy->callback([&] {
    action = [&] {
      json scaling{{"min_replicas", e_min}, {"max_replicas", e_max}, {"target_inflight", e_target},
                   {"cooldown_ms", e_cooldown}};
      json replica{{"kind", e_kind}, {"service_time_ms", e_service}, {"command", e_command}};
      return endpoint_deploy(g, e_model, e_version, scaling, replica);
    };
  });
  auto* estatus = ep->add_subcommand("status", "Show one endpoint or all of them");
  estatus->add_option("model", e_model, "Model name");
  estatus->callback([&] { action = [&] { return endpoint_status(g, e_model); }; });
  auto* predict = ep->add_subcommand("predict", "Send one request to an endpoint");
  predict->add_option("model", e_model, "Model name")->required();
  predict->add_option("--data", e_data, "Request body");
  predict->callback([&] { action = [&] { return endpoint_predict(g, e_model, e_data); }; });

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Metric store");
  metrics->require_subcommand(1);
  std::string q_name;
  std::optional<std::int64_t> q_from, q_to;
  std::vector<std::string> q_labels;
  auto* query = metrics->add_subcommand("query", "Samples of one metric");
  query->add_option("name", q_name, "Metric name")->required();
  query->add_option("--from", q_from, "Start, epoch ms");
  query->add_option("--to", q_to, "End, epoch ms");
  query->add_option("--label", q_labels, "Label filter key=value (repeatable)");
  query->callback([&] { action = [&] { return metrics_query(g, q_name, q_from, q_to, q_labels); }; });
  metrics->add_subcommand("dump", "Latest sample of every series")->callback([&] {
    action = [&] { return metrics_dump(g); };
  });

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Benchmarks; each writes <out>/<experiment>.csv and .raw.csv");
  bench_cmd->require_subcommand(1);
  std::string out = "bench-out";
  bench_cmd->add_option("--out", out, "Output directory");

  bench::DeployTimingOptions dt;
  auto* dtc = bench_cmd->add_subcommand("deploy-time", "Time full local-cluster bring-up");
  dtc->add_option("--repeats", dt.repeats, "Repeats");
  dtc->add_option("--nodes", dt.nodes, "Node agents");
  dtc->add_option("--node-startup-delay-ms", dt.node_startup_delay_ms, "Injected node startup delay");
  dtc->add_option("--timeout-ms", dt.timeout_ms, "Per bring-up limit");
  dtc->callback([&] {
    action = [&] {
      dt.cli = self_executable();
      dt.work_root = fs::absolute(out) / "deploy-runs";
      auto r = bench::run_deployment_timing(dt);
      std::error_code ec;
      fs::remove_all(dt.work_root, ec);
      return finish_bench(g, r, out);
    };
  });

  bench::ConcurrencyOptions co;
  auto* cc = bench_cmd->add_subcommand("concurrency", "Mean latency vs concurrent requests");
  cc->add_option("--replicas", co.replicas, "Replicas");
  cc->add_option("--service-ms", co.service_ms, "Synthetic service time");
  cc->add_option("--levels", co.levels, "Concurrency levels")->delimiter(',');
  cc->add_option("--repeats", co.repeats, "Repeats");
  cc->callback([&] { action = [&] { return finish_bench(g, bench::run_concurrency_sweep(co), out); }; });

  bench::BatchSweepOptions bo;
  auto* bc = bench_cmd->add_subcommand("batch-sweep", "Training time per batch size and scenario");
  bc->add_option("--samples", bo.samples, "Training samples");
  bc->add_option("--batch-sizes", bo.batch_sizes, "Batch sizes")->delimiter(',');
  bc->add_option("--repeats", bo.repeats, "Repeats");
  bc->add_option("--compute-ms", bo.compute_ms_per_sample, "Per-sample compute cost");
  bc->add_option("--sync-ms", bo.sync_ms, "Per-step synchronisation cost");
  bc->callback([&] { action = [&] { return finish_bench(g, bench::run_batch_sweep(bo), out); }; });

  bench::ScaleStudyOptions so;
  auto* ssc = bench_cmd->add_subcommand("scale-study", "Speedup vs replica count");
  ssc->add_option("--replicas", so.replicas, "Replica counts")->delimiter(',');
  ssc->add_option("--concurrency", so.concurrency, "Concurrent requests");
  ssc->add_option("--service-ms", so.service_ms, "Synthetic service time");
  ssc->add_option("--repeats", so.repeats, "Repeats");
  ssc->callback([&] { action = [&] { return finish_bench(g, bench::run_scale_study(so), out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const CLI::App* deepest = &app;
    while (!deepest->get_subcommands().empty()) deepest = deepest->get_subcommands().front();
    std::cerr << "error: " << e.what() << "\n\n" << deepest->help();
    return 1;
  }

  try {
    return action ? action() : 1;
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    return is_user_error(e.code()) ? 1 : 2;
  } catch (const json::exception& e) {
    std::cerr << "error [InvalidArgument]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
