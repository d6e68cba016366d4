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

#include "edgeflow/orchestrator/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "edgeflow/core/workflow.hpp"
#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

namespace {

constexpr std::size_t kMaxWarnings = 1000;
constexpr std::size_t kMaxEvents = 200'000;

bool predicate_holds(double value, PredicateOp op, double threshold) {
  switch (op) {
    case PredicateOp::eq: return value == threshold;
    case PredicateOp::ne: return value != threshold;
    case PredicateOp::lt: return value < threshold;
    case PredicateOp::gt: return value > threshold;
  }
  return false;
}

Cadence parse_cadence(const std::string& text) {
  auto c = Cadence::parse(text);
  if (!c) throw Error(Errc::invalid_argument, "invalid cadence '" + text + "'");
  return *c;
}

// Interval cadences fire on creation; cron cadences at their next match.
std::int64_t first_fire(const Cadence& c, std::int64_t now_ms) {
  return c.is_interval() ? now_ms : c.next_after(now_ms - 1);
}

bool cacheable(const TaskSpec& t) {
  // Deploying has side effects on the serving plane, so it reruns unless
  // asked otherwise.
  return t.param("cache", t.kind == TaskKind::deploy_model ? "false" : "true") == "true";
}

}  // namespace

void to_json(json& j, const ScheduleEntry& v) {
  j = json{{"id", v.id},       {"workflow", v.workflow},         {"cadence", v.cadence},
           {"next_fire_ms", v.next_fire_ms}, {"enabled", v.enabled}, {"fires", v.fires}};
}

void to_json(json& j, const TriggerEntry& v) {
  j = json{{"id", v.id},
           {"trigger", v.spec},
           {"next_eval_ms", v.next_eval_ms},
           {"enabled", v.enabled},
           {"evaluations", v.evaluations},
           {"fires", v.fires}};
}

std::string to_string(ActionKind v) {
  switch (v) {
    case ActionKind::dispatched: return "dispatched";
    case ActionKind::cache_hit: return "cache_hit";
    case ActionKind::succeeded: return "succeeded";
    case ActionKind::failed: return "failed";
    case ActionKind::retried: return "retried";
    case ActionKind::requeued: return "requeued";
    case ActionKind::run_finished: return "run_finished";
    case ActionKind::schedule_fired: return "schedule_fired";
    case ActionKind::trigger_fired: return "trigger_fired";
    case ActionKind::warning: return "warning";
  }
  return "unknown";
}

Orchestrator::Orchestrator(Cluster& cluster, BlobStore& store, MetricSource& metrics,
                           TaskDispatcher& dispatcher, OrchestratorOptions options)
    : cluster_(cluster),
      store_(store),
      metrics_(metrics),
      dispatcher_(dispatcher),
      options_(std::move(options)) {
  char prefix[32];
  std::snprintf(prefix, sizeof prefix, "run-%llx",
                static_cast<unsigned long long>(edgeflow::now_ms()));
  run_prefix_ = prefix;

  if (!options_.catalog_path) return;
  std::vector<WorkflowSpec> saved;
  {
    std::ifstream in(*options_.catalog_path);
    for (std::string line; std::getline(in, line);) {
      try {
        saved.push_back(parse_workflow(line));
      } catch (const Error&) {
      }
    }
  }
  for (const auto& spec : saved) {
    try {
      register_workflow(spec, edgeflow::now_ms());
    } catch (const Error&) {
    }
  }
  if (options_.catalog_path->has_parent_path()) {
    std::filesystem::create_directories(options_.catalog_path->parent_path());
  }
  terminate_partial_line(*options_.catalog_path);
  catalog_log_.open(*options_.catalog_path, std::ios::app);
}

Orchestrator::~Orchestrator() {
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(local_mu_);
    threads.swap(local_threads_);
  }
  for (auto& t : threads) t.join();
}

void Orchestrator::set_local_executor(TaskKind kind, LocalExecutor executor) {
  std::lock_guard lock(mu_);
  local_executors_[kind] = std::move(executor);
}

void Orchestrator::persist_workflow(const WorkflowSpec& spec) {
  if (!catalog_log_.is_open()) return;
  catalog_log_ << json(spec).dump() << '\n';
  catalog_log_.flush();
}

void Orchestrator::register_workflow(const WorkflowSpec& spec, std::int64_t now_ms) {
  require_valid(spec);
  std::lock_guard lock(mu_);
  auto it = catalog_.find(spec.id());
  if (it != catalog_.end()) {
    if (it->second == spec) return;
    throw Error(Errc::invalid_spec, "workflow " + spec.name + " v" + std::to_string(spec.version) +
                                        " is already registered with different content");
  }
  catalog_[spec.id()] = spec;
  persist_workflow(spec);

  if (spec.schedule) {
    auto c = parse_cadence(*spec.schedule);
    ScheduleEntry e{"sched-" + std::to_string(next_entry_++), spec.id(), *spec.schedule,
                    first_fire(c, now_ms), now_ms, true, 0};
    schedules_[e.id] = e;
  }
  if (spec.trigger) {
    TriggerSpec t = *spec.trigger;
    if (t.target_workflow.name.empty()) t.target_workflow = spec.id();
    auto c = parse_cadence(t.evaluation_cadence);
    TriggerEntry e{"trig-" + std::to_string(next_entry_++), t, first_fire(c, now_ms), now_ms, true, 0, 0};
    triggers_[e.id] = e;
  }
}

std::vector<WorkflowSpec> Orchestrator::workflows() const {
  std::lock_guard lock(mu_);
  std::vector<WorkflowSpec> out;
  for (const auto& [_, s] : catalog_) out.push_back(s);
  return out;
}

std::optional<WorkflowSpec> Orchestrator::workflow(const WorkflowId& id) const {
  std::lock_guard lock(mu_);
  auto it = catalog_.find(id);
  if (it == catalog_.end()) return std::nullopt;
  return it->second;
}

std::optional<WorkflowSpec> Orchestrator::latest_workflow(const std::string& name) const {
  std::lock_guard lock(mu_);
  std::optional<WorkflowSpec> best;
  for (const auto& [id, s] : catalog_) {
    if (id.name == name) best = s;  // map order: ascending version
  }
  return best;
}

RunRecord Orchestrator::submit_run(const WorkflowId& workflow, const ParamOverrides& overrides,
                                   std::int64_t now_ms) {
  RunRecord rec;
  {
    std::lock_guard lock(mu_);
    rec = submit_locked(workflow, overrides, now_ms);
  }
  {
    std::lock_guard lock(inbox_mu_);
    wake_ = true;
  }
  inbox_cv_.notify_all();
  return rec;
}

RunRecord Orchestrator::submit_locked(const WorkflowId& workflow, const ParamOverrides& overrides,
                                      std::int64_t now_ms) {
  auto it = catalog_.find(workflow);
  if (it == catalog_.end()) {
    throw Error(Errc::unknown_workflow,
                "UnknownWorkflow(" + workflow.name + " v" + std::to_string(workflow.version) + ")");
  }
  WorkflowSpec spec = it->second;
  for (const auto& [task, _] : overrides) {
    if (task != "*" && !spec.find_task(task)) {
      throw Error(Errc::invalid_argument, "override names unknown task '" + task + "'");
    }
  }
  for (auto& t : spec.tasks) {
    if (auto all = overrides.find("*"); all != overrides.end()) {
      for (const auto& [k, v] : all->second) t.params[k] = v;
    }
    if (auto own = overrides.find(t.name); own != overrides.end()) {
      for (const auto& [k, v] : own->second) t.params[k] = v;
    }
  }
  if (!overrides.empty()) require_valid(spec);

  RunRuntime run;
  run.record.run_id = run_prefix_ + "-" + std::to_string(next_run_++);
  run.record.workflow = workflow;
  run.record.state = RunState::pending;
  run.record.submitted_ms = now_ms;
  run.order = topo_order(spec);
  for (const auto& t : spec.tasks) {
    run.record.tasks[t.name] = TaskState::pending;
    run.record.attempts[t.name] = 0;
    run.tasks[t.name] = TaskRuntime{};
  }
  run.spec = std::move(spec);
  auto record = run.record;
  run_order_.push_back(record.run_id);
  runs_.emplace(record.run_id, std::move(run));
  return record;
}

std::optional<RunRecord> Orchestrator::run(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  auto it = runs_.find(run_id);
  if (it == runs_.end()) return std::nullopt;
  return it->second.record;
}

std::vector<RunRecord> Orchestrator::runs() const {
  std::lock_guard lock(mu_);
  std::vector<RunRecord> out;
  for (const auto& id : run_order_) out.push_back(runs_.at(id).record);
  return out;
}

std::size_t Orchestrator::active_runs() const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(runs_.begin(), runs_.end(), [](const auto& kv) {
    return !kv.second.record.terminal();
  }));
}

ScheduleEntry Orchestrator::add_schedule(const WorkflowId& workflow, const std::string& cadence,
                                         std::int64_t now_ms) {
  auto c = parse_cadence(cadence);
  std::lock_guard lock(mu_);
  if (!catalog_.contains(workflow)) {
    throw Error(Errc::unknown_workflow, "UnknownWorkflow(" + workflow.name + ")");
  }
  ScheduleEntry e{"sched-" + std::to_string(next_entry_++), workflow, cadence, first_fire(c, now_ms),
                  now_ms, true, 0};
  schedules_[e.id] = e;
  return e;
}

TriggerEntry Orchestrator::add_trigger(const TriggerSpec& trigger, std::int64_t now_ms) {
  auto c = parse_cadence(trigger.evaluation_cadence);
  if (!std::isfinite(trigger.threshold)) {
    throw Error(Errc::invalid_argument, "trigger threshold must be finite");
  }
  std::lock_guard lock(mu_);
  if (!catalog_.contains(trigger.target_workflow)) {
    throw Error(Errc::unknown_workflow, "UnknownWorkflow(" + trigger.target_workflow.name + ")");
  }
  TriggerEntry e{"trig-" + std::to_string(next_entry_++), trigger, first_fire(c, now_ms), now_ms,
                 true, 0, 0};
  triggers_[e.id] = e;
  return e;
}

std::vector<ScheduleEntry> Orchestrator::schedules() const {
  std::lock_guard lock(mu_);
  std::vector<ScheduleEntry> out;
  for (const auto& [_, e] : schedules_) out.push_back(e);
  return out;
}

std::vector<TriggerEntry> Orchestrator::triggers() const {
  std::lock_guard lock(mu_);
  std::vector<TriggerEntry> out;
  for (const auto& [_, e] : triggers_) out.push_back(e);
  return out;
}

void Orchestrator::set_schedule_enabled(const std::string& id, bool enabled) {
  std::lock_guard lock(mu_);
  auto it = schedules_.find(id);
  if (it == schedules_.end()) throw Error(Errc::not_found, "no schedule " + id);
  it->second.enabled = enabled;
}

bool Orchestrator::evaluate_trigger(const TriggerSpec& trigger, std::int64_t now_ms) {
  std::lock_guard lock(mu_);
  return evaluate_locked(trigger, now_ms);
}

bool Orchestrator::evaluate_locked(const TriggerSpec& trigger, std::int64_t now_ms) {
  auto sample = metrics_.latest(trigger.metric_query.name, trigger.metric_query.labels);
  if (!sample) {
    std::vector<Action> ignored;
    warn_locked("trigger metric " + trigger.metric_query.name + " has no samples", ignored);
    return false;
  }
  if (!predicate_holds(sample->value, trigger.op, trigger.threshold)) return false;
  submit_locked(trigger.target_workflow, {}, now_ms);
  return true;
}

void Orchestrator::warn_locked(std::string message, std::vector<Action>& actions) {
  actions.push_back({ActionKind::warning, "", "", message});
  warnings_.push_back(std::move(message));
  while (warnings_.size() > kMaxWarnings) warnings_.pop_front();
}

void Orchestrator::event_locked(ActionKind kind, const std::string& run, const std::string& task,
                                int attempt) {
  if (events_.size() >= kMaxEvents) events_.erase(events_.begin(), events_.begin() + kMaxEvents / 2);
  events_.push_back({next_seq_++, kind, run, task, attempt});
}

std::vector<std::string> Orchestrator::warnings() const {
  std::lock_guard lock(mu_);
  return {warnings_.begin(), warnings_.end()};
}

std::vector<OrchestratorEvent> Orchestrator::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

void Orchestrator::deliver(TaskResult result) {
  {
    std::lock_guard lock(inbox_mu_);
    inbox_.push_back(std::move(result));
  }
  inbox_cv_.notify_all();
}

void Orchestrator::wait_for_work(std::chrono::milliseconds timeout) {
  std::unique_lock lock(inbox_mu_);
  inbox_cv_.wait_for(lock, timeout, [&] { return !inbox_.empty() || wake_; });
  wake_ = false;
}

std::vector<Action> Orchestrator::tick(std::int64_t now_ms) {
  std::deque<TaskResult> inbox;
  {
    std::lock_guard lock(inbox_mu_);
    inbox.swap(inbox_);
  }
  std::vector<Action> actions;
  std::lock_guard lock(mu_);
  for (auto& r : inbox) handle_result(std::move(r), now_ms, actions);
  handle_dead_nodes(now_ms, actions);
  fire_schedules(now_ms, actions);
  fire_triggers(now_ms, actions);
  for (const auto& id : run_order_) {
    auto& run = runs_.at(id);
    if (!run.record.terminal()) advance_run(run, now_ms, actions);
  }
  return actions;
}

void Orchestrator::handle_result(TaskResult result, std::int64_t now_ms, std::vector<Action>& actions) {
  auto it = runs_.find(result.run_id);
  if (it == runs_.end()) return;
  auto& run = it->second;
  auto rt_it = run.tasks.find(result.task);
  if (rt_it == run.tasks.end()) return;
  auto& rt = rt_it->second;
  if (run.record.tasks[result.task] != TaskState::running || rt.attempts != result.attempt) {
    return;  // stale attempt, already requeued
  }
  cluster_.release(rt.placements);
  rt.placements.clear();

  const TaskSpec& spec = *run.spec.find_task(result.task);
  if (result.ok) {
    for (const auto& o : spec.outputs) {
      if (!result.outputs.contains(o)) {
        result.ok = false;
        result.error = "ProtocolViolation";
        result.message = "declared output '" + o + "' not produced";
      }
    }
  }
  if (run.record.terminal()) {
    run.record.tasks[result.task] = result.ok ? TaskState::succeeded : TaskState::failed;
    return;
  }

  std::int64_t start = result.start_ms > 0 ? result.start_ms : rt.dispatch_ms;
  std::int64_t end = result.end_ms > 0 ? result.end_ms : now_ms;
  if (result.ok) {
    if (start > rt.ready_ms) run.record.stage_timings.push_back({StageKind::other, rt.ready_ms, start, spec.name});
    run.record.stage_timings.push_back({stage_for(spec), start, end, spec.name});
    run.record.tasks[spec.name] = TaskState::succeeded;
    run.record.produced[spec.name] = result.outputs;
    run.record.task_metrics[spec.name] = result.metrics;
    run.record.errors.erase(spec.name);
    rt.end_ms = end;
    if (cacheable(spec)) cache_store(rt.cache_key, result);
    event_locked(ActionKind::succeeded, run.record.run_id, spec.name, result.attempt);
    actions.push_back({ActionKind::succeeded, run.record.run_id, spec.name, result.node_id});
  } else {
    std::string error = result.error.empty() ? "TaskFailed" : result.error;
    if (!result.message.empty()) error += ": " + result.message;
    if (!result.stderr_tail.empty()) error += "\n" + result.stderr_tail;
    event_locked(ActionKind::failed, run.record.run_id, spec.name, result.attempt);
    fail_attempt(run, spec.name, error, now_ms, actions);
  }
}

void Orchestrator::fail_attempt(RunRuntime& run, const std::string& task, const std::string& error,
                                std::int64_t now_ms, std::vector<Action>& actions) {
  auto& rt = run.tasks.at(task);
  run.record.errors[task] = error;
  if (now_ms > rt.ready_ms && rt.ready_ms >= 0) {
    run.record.stage_timings.push_back({StageKind::other, rt.ready_ms, now_ms, task});
  }
  if (rt.attempts <= options_.retry_limit) {
    run.record.tasks[task] = TaskState::pending;
    rt.ready_ms = now_ms;
    actions.push_back({ActionKind::retried, run.record.run_id, task, error});
    return;
  }
  run.record.tasks[task] = TaskState::failed;
  actions.push_back({ActionKind::failed, run.record.run_id, task, error});
  finish_run(run, RunState::failed, now_ms, actions);
}

void Orchestrator::finish_run(RunRuntime& run, RunState state, std::int64_t now_ms,
                              std::vector<Action>& actions) {
  run.record.state = state;
  run.record.finished_ms = now_ms;
  event_locked(ActionKind::run_finished, run.record.run_id, "", 0);
  actions.push_back({ActionKind::run_finished, run.record.run_id, "", to_string(state)});
}

void Orchestrator::handle_dead_nodes(std::int64_t now_ms, std::vector<Action>& actions) {
  auto dead = cluster_.sweep(now_ms);
  if (dead.empty()) return;
  for (const auto& node : dead) warn_locked("node " + node + " missed its heartbeats", actions);
  for (const auto& id : run_order_) {
    auto& run = runs_.at(id);
    if (run.record.terminal()) continue;
    for (auto& [name, rt] : run.tasks) {
      if (run.record.tasks[name] != TaskState::running) continue;
      bool lost = std::any_of(rt.placements.begin(), rt.placements.end(), [&](const Placement& p) {
        return std::find(dead.begin(), dead.end(), p.node_id) != dead.end();
      });
      if (!lost) continue;
      cluster_.release(rt.placements);
      rt.placements.clear();
      event_locked(ActionKind::requeued, run.record.run_id, name, rt.attempts);
      actions.push_back({ActionKind::requeued, run.record.run_id, name, "node lost"});
      fail_attempt(run, name, "NodeLost", now_ms, actions);
      if (run.record.terminal()) break;
    }
  }
}

void Orchestrator::fire_schedules(std::int64_t now_ms, std::vector<Action>& actions) {
  for (auto& [id, e] : schedules_) {
    if (!e.enabled || e.next_fire_ms > now_ms) continue;
    try {
      auto rec = submit_locked(e.workflow, {}, now_ms);
      actions.push_back({ActionKind::schedule_fired, rec.run_id, "", id});
    } catch (const Error& err) {
      warn_locked("schedule " + id + ": " + err.what(), actions);
    }
    ++e.fires;
    // Missed fires are skipped, not replayed.
    e.next_fire_ms = parse_cadence(e.cadence).next_after(now_ms, e.anchor_ms);
  }
}

void Orchestrator::fire_triggers(std::int64_t now_ms, std::vector<Action>& actions) {
  for (auto& [id, e] : triggers_) {
    if (!e.enabled || e.next_eval_ms > now_ms) continue;
    e.next_eval_ms = parse_cadence(e.spec.evaluation_cadence).next_after(now_ms, e.anchor_ms);
    ++e.evaluations;
    try {
      std::size_t before = run_order_.size();
      if (evaluate_locked(e.spec, now_ms)) {
        ++e.fires;
        actions.push_back({ActionKind::trigger_fired, run_order_.size() > before ? run_order_.back() : "", "", id});
      }
    } catch (const Error& err) {
      warn_locked("trigger " + id + " skipped: " + err.what(), actions);
    }
  }
}

bool Orchestrator::advance_run(RunRuntime& run, std::int64_t now_ms, std::vector<Action>& actions) {
  auto& rec = run.record;
  bool changed_any = false;
  for (bool changed = true; changed && !rec.terminal();) {
    changed = false;
    for (const auto& name : run.order) {
      if (rec.tasks[name] != TaskState::pending) continue;
      const TaskSpec& spec = *run.spec.find_task(name);
      auto& rt = run.tasks.at(name);
      auto deps = spec.dependencies();
      bool ready = std::all_of(deps.begin(), deps.end(),
                               [&](const std::string& d) { return rec.tasks[d] == TaskState::succeeded; });
      if (!ready) continue;
      if (rt.ready_ms < 0) {
        rt.ready_ms = rec.submitted_ms;
        for (const auto& d : deps) rt.ready_ms = std::max(rt.ready_ms, run.tasks.at(d).end_ms);
      }

      std::vector<ResolvedInput> inputs;
      std::vector<ArtifactRef> refs;
      std::string missing;
      for (const auto& sel : spec.inputs) {
        ResolvedInput in{sel.local_name(), {}};
        if (!sel.from_task.empty()) {
          auto& produced = rec.produced[sel.from_task];
          auto it = produced.find(sel.output);
          if (it == produced.end()) {
            missing = sel.from_task + "." + sel.output;
            break;
          }
          in.ref = it->second;
        } else {
          auto st = store_.stat(sel.bucket, sel.key);
          if (!st) {
            missing = sel.bucket + "/" + sel.key;
            break;
          }
          in.ref = st->ref;
        }
        refs.push_back(in.ref);
        inputs.push_back(std::move(in));
      }
      if (!missing.empty()) {
        ++rt.attempts;
        rec.attempts[name] = rt.attempts;
        rt.attempts = options_.retry_limit + 1;  // retrying cannot conjure the input
        fail_attempt(run, name, "NotFound: input " + missing, now_ms, actions);
        changed = true;
        break;
      }

      rt.cache_key = cache_key(spec, refs);
      if (cacheable(spec)) {
        if (auto hit = cache_lookup(spec, rt.cache_key)) {
          rec.tasks[name] = TaskState::succeeded;
          rec.produced[name] = *hit;
          rec.cache_hits.insert(name);
          rt.end_ms = now_ms;
          event_locked(ActionKind::cache_hit, rec.run_id, name, rt.attempts);
          actions.push_back({ActionKind::cache_hit, rec.run_id, name, rt.cache_key});
          changed = true;
          continue;
        }
      }

      auto local = local_executors_.find(spec.kind);
      std::vector<Placement> placements;
      if (local == local_executors_.end()) {
        try {
          placements = cluster_.place_task(spec, now_ms);
        } catch (const UnschedulableError& e) {
          if (!rt.unschedulable_warned) {
            rt.unschedulable_warned = true;
            warn_locked("run " + rec.run_id + " task " + name + ": " + e.what(), actions);
          }
          continue;
        }
      }

      ++rt.attempts;
      rec.attempts[name] = rt.attempts;
      rec.tasks[name] = TaskState::running;
      rt.dispatch_ms = now_ms;
      rt.placements = placements;

      DispatchRequest req;
      req.run_id = rec.run_id;
      req.task = spec;
      req.inputs = std::move(inputs);
      req.attempt = rt.attempts;
      req.placements = placements;
      req.cache_key = rt.cache_key;
      req.coordinator_url = options_.coordinator_url;
      for (const auto& p : placements) {
        if (auto n = cluster_.node(p.node_id, now_ms)) req.speed = std::max(req.speed, n->speed);
      }
      event_locked(ActionKind::dispatched, rec.run_id, name, rt.attempts);
      actions.push_back({ActionKind::dispatched, rec.run_id, name,
                         placements.empty() ? "coordinator" : placements.front().node_id});
      if (local != local_executors_.end()) {
        start_local(local->second, std::move(req));
      } else {
        dispatcher_.dispatch(std::move(req), [this](TaskResult r) { deliver(std::move(r)); });
      }
      changed = true;
    }
    changed_any |= changed;
  }
  if (rec.terminal()) return true;

  bool all_done = std::all_of(rec.tasks.begin(), rec.tasks.end(),
                              [](const auto& kv) { return kv.second == TaskState::succeeded; });
  if (all_done) {
    finish_run(run, RunState::succeeded, now_ms, actions);
    return true;
  }
  if (rec.state == RunState::pending && changed_any) rec.state = RunState::running;
  return changed_any;
}

std::optional<std::map<std::string, ArtifactRef>> Orchestrator::cache_lookup(const TaskSpec& task,
                                                                             const std::string& key) {
  std::map<std::string, ArtifactRef> outputs;
  try {
    auto st = store_.stat("cache", key);
    if (!st) return std::nullopt;
    auto entry = parse_json(store_.get("cache", key).bytes);
    outputs = entry.at("outputs").get<std::map<std::string, ArtifactRef>>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
  for (const auto& o : task.outputs) {
    auto it = outputs.find(o);
    if (it == outputs.end()) return std::nullopt;
    auto st = store_.stat(it->second.bucket, it->second.key);
    // The object may have been overwritten or deleted since it was cached.
    if (!st || st->ref.digest != it->second.digest) return std::nullopt;
  }
  return outputs;
}

void Orchestrator::cache_store(const std::string& key, const TaskResult& result) {
  try {
    json entry = {{"outputs", result.outputs}, {"metrics", result.metrics}};
    store_.put("cache", key, entry.dump(), "application/json");
  } catch (const Error& e) {
    std::vector<Action> ignored;
    warn_locked(std::string("cache write failed: ") + e.what(), ignored);
  }
}

void Orchestrator::start_local(LocalExecutor executor, DispatchRequest request) {
  std::lock_guard lock(local_mu_);
  local_threads_.emplace_back([this, executor = std::move(executor), request = std::move(request)] {
    TaskResult result;
    try {
      result = executor(request);
    } catch (const Error& e) {
      result.ok = false;
      result.error = errc_name(e.code());
      result.message = e.what();
    } catch (const std::exception& e) {
      result.ok = false;
      result.error = "IoError";
      result.message = e.what();
    }
    result.run_id = request.run_id;
    result.task = request.task.name;
    result.attempt = request.attempt;
    deliver(std::move(result));
  });
}

}  // namespace edgeflow
