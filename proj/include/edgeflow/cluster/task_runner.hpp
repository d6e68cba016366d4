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

#pragma once

#include <filesystem>
#include <string>

#include "edgeflow/cluster/protocol.hpp"
#include "edgeflow/objstore/object_store.hpp"

namespace edgeflow {

struct RunnerOptions {
  std::filesystem::path scratch_root;
  std::string node_id;
  std::string coordinator_url;
  bool keep_scratch = false;
};

// Object key under bucket "artifacts" for one task output.
std::string artifact_key(const std::string& cache_key, const std::string& output);

// Runs one attempt and uploads its declared outputs. Never throws: failures
// come back as ok=false with an Errc name (or "TaskFailed" for a nonzero
// exit) and the stderr tail.
TaskResult execute_task(const DispatchRequest& request, BlobStore& store,
                        const RunnerOptions& options);

// Deterministic synthetic QoE-style CSV (timestamp, ul_bytes, dl_bytes,
// throughput, cell_id).
std::string synthetic_qoe_csv(std::int64_t rows, std::uint64_t seed);

}  // namespace edgeflow
