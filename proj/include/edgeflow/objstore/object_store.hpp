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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "edgeflow/core/types.hpp"

namespace edgeflow {

struct ObjectRecord {
  ArtifactRef ref;
  std::int64_t created_ms = 0;
  std::string content_type = "application/octet-stream";
};

struct StoredObject {
  std::string bytes;
  ObjectRecord record;
};

// Bucket/key object storage. Implemented locally by ObjectStore and
// remotely (for node agents) by HttpBlobStore.
class BlobStore {
 public:
  virtual ~BlobStore() = default;

  virtual ArtifactRef put(std::string_view bucket, std::string_view key, std::string_view bytes,
                          std::string_view content_type = "application/octet-stream") = 0;
  virtual StoredObject get(std::string_view bucket, std::string_view key) = 0;
  virtual std::optional<ObjectRecord> stat(std::string_view bucket, std::string_view key) = 0;
  virtual std::vector<std::string> list(std::string_view bucket, std::string_view prefix = {}) = 0;
  virtual bool remove(std::string_view bucket, std::string_view key) = 0;
};

struct ObjectStoreOptions {
  // Sum of live object sizes; 0 means unlimited.
  std::int64_t quota_bytes = 0;
};

// Content-addressed layout:
//   <root>/<bucket>/<digest[0:2]>/<digest>   object bytes
//   <root>/<bucket>/index.log                 append-only key -> digest log
// Blobs are immutable once written, so readers racing an overwrite see
// either the old or the new bytes.
class ObjectStore : public BlobStore {
 public:
  explicit ObjectStore(std::filesystem::path root, ObjectStoreOptions options = {});
  ~ObjectStore() override;

  ArtifactRef put(std::string_view bucket, std::string_view key, std::string_view bytes,
                  std::string_view content_type = "application/octet-stream") override;
  StoredObject get(std::string_view bucket, std::string_view key) override;
  std::optional<ObjectRecord> stat(std::string_view bucket, std::string_view key) override;
  std::vector<std::string> list(std::string_view bucket, std::string_view prefix = {}) override;
  bool remove(std::string_view bucket, std::string_view key) override;

  std::int64_t used_bytes() const;
  std::filesystem::path blob_path(const ArtifactRef& ref) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  struct Bucket;

  Bucket& bucket(std::string_view name);
  Bucket* find_bucket(std::string_view name);
  void load();

  std::filesystem::path root_;
  ObjectStoreOptions options_;
  mutable std::mutex buckets_mu_;
  std::map<std::string, std::unique_ptr<Bucket>, std::less<>> buckets_;
  std::int64_t used_bytes_ = 0;  // guarded by buckets_mu_
};

}  // namespace edgeflow
