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

#include "edgeflow/cluster/protocol.hpp"

#include <cmath>

#include "edgeflow/error.hpp"

namespace edgeflow {

void to_json(json& j, const ResolvedInput& v) { j = json{{"name", v.name}, {"ref", v.ref}}; }

void from_json(const json& j, ResolvedInput& v) {
  v.name = j.at("name").get<std::string>();
  v.ref = j.at("ref").get<ArtifactRef>();
}

void to_json(json& j, const DispatchRequest& v) {
  j = json{{"run_id", v.run_id},         {"task", v.task},
           {"inputs", v.inputs},         {"attempt", v.attempt},
           {"placements", v.placements}, {"cache_key", v.cache_key},
           {"speed", v.speed},           {"coordinator_url", v.coordinator_url}};
}

void from_json(const json& j, DispatchRequest& v) {
  v.run_id = j.at("run_id").get<std::string>();
  v.task = j.at("task").get<TaskSpec>();
  v.inputs = j.value("inputs", std::vector<ResolvedInput>{});
  v.attempt = j.value("attempt", 1);
  v.placements = j.value("placements", std::vector<Placement>{});
  v.cache_key = j.value("cache_key", std::string());
  v.speed = j.value("speed", 1.0);
  v.coordinator_url = j.value("coordinator_url", std::string());
}

void to_json(json& j, const TaskResult& v) {
  j = json{{"run_id", v.run_id},   {"task", v.task},
           {"attempt", v.attempt}, {"ok", v.ok},
           {"outputs", v.outputs}, {"metrics", v.metrics},
           {"error", v.error},     {"message", v.message},
           {"stderr_tail", v.stderr_tail}, {"node_id", v.node_id},
           {"start_ms", v.start_ms}, {"end_ms", v.end_ms}};
}

void from_json(const json& j, TaskResult& v) {
  v.run_id = j.at("run_id").get<std::string>();
  v.task = j.at("task").get<std::string>();
  v.attempt = j.at("attempt").get<int>();
  v.ok = j.at("ok").get<bool>();
  v.outputs = j.value("outputs", std::map<std::string, ArtifactRef>{});
  v.metrics = j.value("metrics", std::map<std::string, double>{});
  v.error = j.value("error", std::string());
  v.message = j.value("message", std::string());
  v.stderr_tail = j.value("stderr_tail", std::string());
  v.node_id = j.value("node_id", std::string());
  v.start_ms = j.value("start_ms", std::int64_t{0});
  v.end_ms = j.value("end_ms", std::int64_t{0});
}

json manifest_json(const TaskManifest& m) {
  json inputs = json::array();
  for (const auto& in : m.inputs) inputs.push_back({{"name", in.name}, {"path", in.path}});
  return json{{"task_name", m.task_name},
              {"params", m.params},
              {"inputs", inputs},
              {"output_dir", m.output_dir},
              {"coordinator_url", m.coordinator_url}};
}

TaskManifest parse_task_manifest(std::string_view text) {
  try {
    auto j = json::parse(text);
    TaskManifest m;
    m.task_name = j.at("task_name").get<std::string>();
    m.params = j.at("params").get<Params>();
    for (const auto& in : j.at("inputs")) {
      m.inputs.push_back({in.at("name").get<std::string>(), in.at("path").get<std::string>()});
    }
    m.output_dir = j.at("output_dir").get<std::string>();
    m.coordinator_url = j.at("coordinator_url").get<std::string>();
    return m;
  } catch (const json::exception& e) {
    throw Error(Errc::protocol_violation, std::string("task manifest: ") + e.what());
  }
}

OutputsManifest parse_outputs_manifest(std::string_view text) {
  auto violation = [](const std::string& why) {
    return Error(Errc::protocol_violation, "outputs.json: " + why);
  };
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw violation(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw violation("top level must be an object");
  if (!j.contains("outputs") || !j["outputs"].is_array()) throw violation("'outputs' must be an array");
  if (!j.contains("metrics") || !j["metrics"].is_object()) throw violation("'metrics' must be an object");

  OutputsManifest m;
  for (const auto& e : j["outputs"]) {
    if (!e.is_object() || !e.contains("name") || !e["name"].is_string() || !e.contains("path") ||
        !e["path"].is_string()) {
      throw violation("each output needs string 'name' and 'path'");
    }
    OutputEntry out{e["name"].get<std::string>(), e["path"].get<std::string>()};
    if (out.name.empty() || out.path.empty()) throw violation("empty output name or path");
    for (const auto& prev : m.outputs) {
      if (prev.name == out.name) throw violation("duplicate output '" + out.name + "'");
    }
    m.outputs.push_back(std::move(out));
  }
  for (const auto& [k, v] : j["metrics"].items()) {
    if (!v.is_number()) throw violation("metric '" + k + "' is not a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw violation("metric '" + k + "' is not finite");
    m.metrics[k] = d;
  }
  return m;
}

std::string format_outputs_manifest(const OutputsManifest& m) {
  json outputs = json::array();
  for (const auto& o : m.outputs) outputs.push_back({{"name", o.name}, {"path", o.path}});
  json metrics = json::object();
  for (const auto& [k, v] : m.metrics) metrics[k] = v;
  return json{{"outputs", outputs}, {"metrics", metrics}}.dump();
}

std::string encode_frame(std::string_view payload) {
  auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(payload.size() + 4);
  out.push_back(static_cast<char>(n >> 24));
  out.push_back(static_cast<char>(n >> 16));
  out.push_back(static_cast<char>(n >> 8));
  out.push_back(static_cast<char>(n));
  out.append(payload);
  return out;
}

bool decode_frame(std::string& buffer, std::string& payload) {
  if (buffer.size() < 4) return false;
  auto b = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(buffer[i])); };
  std::uint32_t n = b(0) << 24 | b(1) << 16 | b(2) << 8 | b(3);
  if (buffer.size() < 4 + static_cast<std::size_t>(n)) return false;
  payload = buffer.substr(4, n);
  buffer.erase(0, 4 + static_cast<std::size_t>(n));
  return true;
}

}  // namespace edgeflow
