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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "edgeflow/core/serialize.hpp"
#include "edgeflow/core/types.hpp"
#include "edgeflow/objstore/object_store.hpp"

namespace edgeflow {

enum class ModelStage { none, staging, production, archived };

std::string to_string(ModelStage s);
ModelStage parse_model_stage(std::string_view s);

struct ModelRecord {
  std::string name;
  int version = 0;
  ArtifactRef payload;
  std::map<std::string, std::string> metadata;
  std::set<std::string> tags;
  ModelStage stage = ModelStage::none;
  std::int64_t created_ms = 0;

  bool operator==(const ModelRecord&) const = default;
};

void to_json(json& j, const ModelRecord& v);
void from_json(const json& j, ModelRecord& v);

struct ModelSelector {
  enum class Kind { version, tag, latest, stage };

  std::string name;
  Kind kind = Kind::latest;
  int version = 0;
  std::string tag;
  ModelStage stage = ModelStage::none;

  static ModelSelector latest(std::string name) { return {std::move(name), Kind::latest, 0, {}, ModelStage::none}; }
  static ModelSelector at_version(std::string name, int v) {
    return {std::move(name), Kind::version, v, {}, ModelStage::none};
  }
  static ModelSelector by_tag(std::string name, std::string tag) {
    return {std::move(name), Kind::tag, 0, std::move(tag)};
  }
  static ModelSelector in_stage(std::string name, ModelStage s) {
    return {std::move(name), Kind::stage, 0, {}, s};
  }
};

void to_json(json& j, const ModelSelector& v);
void from_json(const json& j, ModelSelector& v);

struct RegistryOptions {
  std::int64_t max_payload_bytes = 256LL << 20;
};

// Model catalog. Payloads live in the object store's "models" bucket; the
// catalog itself is an append-only operation log replayed at startup.
// Mutations serialize on one writer lock; reads share a reader lock.
class Registry {
 public:
  static constexpr std::size_t kMaxMetadataValue = 4096;
  static constexpr const char* kBucket = "models";

  Registry(BlobStore& store, std::filesystem::path log_path, RegistryOptions options = {});

  ModelRecord register_model(const std::string& name, std::string_view payload,
                             std::map<std::string, std::string> metadata = {},
                             std::set<std::string> tags = {});
  // Copies the referenced object into the models bucket.
  ModelRecord register_model(const std::string& name, const ArtifactRef& payload,
                             std::map<std::string, std::string> metadata = {},
                             std::set<std::string> tags = {});

  ModelRecord resolve(const ModelSelector& selector) const;
  ModelRecord set_stage(const std::string& name, int version, ModelStage stage);
  // Deterministic ZIP: payload.bin + manifest.json (name, version, digest,
  // size_bytes, metadata).
  std::string package_model(const std::string& name, int version) const;

  std::vector<std::string> names() const;
  std::vector<ModelRecord> versions(const std::string& name) const;

 private:
  void replay();
  void append(const json& entry);
  void apply_stage(std::vector<ModelRecord>& versions, int version, ModelStage stage);
  static void validate_metadata(const std::map<std::string, std::string>& metadata);

  BlobStore& store_;
  std::filesystem::path log_path_;
  RegistryOptions options_;
  std::mutex writer_mu_;
  mutable std::shared_mutex state_mu_;
  std::map<std::string, std::vector<ModelRecord>> models_;  // index = version-1
  std::ofstream log_;
};

}  // namespace edgeflow
