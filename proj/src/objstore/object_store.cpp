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

#include "edgeflow/objstore/object_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "edgeflow/core/serialize.hpp"
#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

struct ObjectStore::Bucket {
  std::shared_mutex mu;
  std::map<std::string, ObjectRecord, std::less<>> index;
  std::int64_t last_created_ms = 0;
  std::ofstream log;
};

namespace {

void check_names(std::string_view bucket, std::string_view key) {
  if (!is_identifier(bucket)) {
    throw Error(Errc::invalid_name, "invalid bucket name '" + std::string(bucket) + "'");
  }
  if (!is_identifier(key)) {
    throw Error(Errc::invalid_name, "invalid object key '" + std::string(key) + "'");
  }
}

}  // namespace

ObjectStore::ObjectStore(std::filesystem::path root, ObjectStoreOptions options)
    : root_(std::move(root)), options_(options) {
  std::filesystem::create_directories(root_);
  load();
}

ObjectStore::~ObjectStore() = default;

void ObjectStore::load() {
  for (const auto& entry : std::filesystem::directory_iterator(root_)) {
    if (!entry.is_directory()) continue;
    auto name = entry.path().filename().string();
    if (!is_identifier(name)) continue;
    auto log_path = entry.path() / "index.log";
    if (!std::filesystem::exists(log_path)) continue;

    auto& b = bucket(name);
    std::ifstream in(log_path);
    for (std::string line; std::getline(in, line);) {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        continue;  // torn tail write
      }
      auto key = j.value("key", std::string());
      if (j.value("op", std::string()) == "del") {
        if (auto it = b.index.find(key); it != b.index.end()) {
          used_bytes_ -= it->second.ref.size_bytes;
          b.index.erase(it);
        }
        continue;
      }
      ObjectRecord rec;
      rec.ref = {name, key, j.value("digest", std::string()), j.value("size", std::int64_t{0})};
      rec.created_ms = j.value("created_ms", std::int64_t{0});
      rec.content_type = j.value("content_type", std::string("application/octet-stream"));
      if (auto it = b.index.find(key); it != b.index.end()) {
        used_bytes_ -= it->second.ref.size_bytes;
      }
      used_bytes_ += rec.ref.size_bytes;
      b.last_created_ms = std::max(b.last_created_ms, rec.created_ms);
      b.index[key] = std::move(rec);
    }
  }
}

ObjectStore::Bucket& ObjectStore::bucket(std::string_view name) {
  std::lock_guard lock(buckets_mu_);
  auto it = buckets_.find(name);
  if (it != buckets_.end()) return *it->second;
  auto dir = root_ / std::string(name);
  std::filesystem::create_directories(dir);
  auto b = std::make_unique<Bucket>();
  terminate_partial_line(dir / "index.log");
  b->log.open(dir / "index.log", std::ios::app);
  if (!b->log) throw Error(Errc::io_error, "cannot open index for bucket " + std::string(name));
  auto& ref = *b;
  buckets_.emplace(std::string(name), std::move(b));
  return ref;
}

ObjectStore::Bucket* ObjectStore::find_bucket(std::string_view name) {
  std::lock_guard lock(buckets_mu_);
  auto it = buckets_.find(name);
  return it == buckets_.end() ? nullptr : it->second.get();
}

std::filesystem::path ObjectStore::blob_path(const ArtifactRef& ref) const {
  return root_ / ref.bucket / ref.digest.substr(0, 2) / ref.digest;
}

ArtifactRef ObjectStore::put(std::string_view bucket_name, std::string_view key,
                             std::string_view bytes, std::string_view content_type) {
  check_names(bucket_name, key);
  ArtifactRef ref{std::string(bucket_name), std::string(key), sha256_hex(bytes),
                  static_cast<std::int64_t>(bytes.size())};
  auto path = blob_path(ref);
  if (!std::filesystem::exists(path)) write_file_atomic(path, bytes);

  auto& b = bucket(bucket_name);
  std::unique_lock lock(b.mu);
  std::int64_t previous = 0;
  if (auto it = b.index.find(key); it != b.index.end()) previous = it->second.ref.size_bytes;
  {
    std::lock_guard q(buckets_mu_);
    std::int64_t next = used_bytes_ - previous + ref.size_bytes;
    if (options_.quota_bytes > 0 && next > options_.quota_bytes) {
      throw Error(Errc::storage_full, "quota of " + std::to_string(options_.quota_bytes) +
                                          " bytes exceeded");
    }
    used_bytes_ = next;
  }
  ObjectRecord rec;
  rec.ref = ref;
  rec.created_ms = std::max(now_ms(), b.last_created_ms);
  rec.content_type = std::string(content_type);
  b.last_created_ms = rec.created_ms;

  json line{{"op", "put"},         {"key", ref.key},
            {"digest", ref.digest}, {"size", ref.size_bytes},
            {"created_ms", rec.created_ms}, {"content_type", rec.content_type}};
  b.log << line.dump() << '\n';
  b.log.flush();
  b.index[std::string(key)] = std::move(rec);
  return ref;
}

StoredObject ObjectStore::get(std::string_view bucket_name, std::string_view key) {
  auto rec = stat(bucket_name, key);
  if (!rec) {
    throw Error(Errc::not_found, "no object " + std::string(bucket_name) + "/" + std::string(key));
  }
  StoredObject obj;
  try {
    obj.bytes = read_file(blob_path(rec->ref));
  } catch (const Error&) {
    throw Error(Errc::digest_mismatch, "object data missing for " + rec->ref.key);
  }
  if (static_cast<std::int64_t>(obj.bytes.size()) != rec->ref.size_bytes ||
      sha256_hex(obj.bytes) != rec->ref.digest) {
    throw Error(Errc::digest_mismatch, "digest mismatch for " + std::string(bucket_name) + "/" +
                                           std::string(key));
  }
  obj.record = std::move(*rec);
  return obj;
}

std::optional<ObjectRecord> ObjectStore::stat(std::string_view bucket_name, std::string_view key) {
  auto* b = find_bucket(bucket_name);
  if (b == nullptr) return std::nullopt;
  std::shared_lock lock(b->mu);
  auto it = b->index.find(key);
  if (it == b->index.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ObjectStore::list(std::string_view bucket_name, std::string_view prefix) {
  std::vector<std::string> keys;
  auto* b = find_bucket(bucket_name);
  if (b == nullptr) return keys;
  std::shared_lock lock(b->mu);
  for (auto it = b->index.lower_bound(prefix); it != b->index.end(); ++it) {
    if (!it->first.starts_with(prefix)) break;
    keys.push_back(it->first);
  }
  return keys;
}

bool ObjectStore::remove(std::string_view bucket_name, std::string_view key) {
  auto* b = find_bucket(bucket_name);
  if (b == nullptr) return false;
  std::unique_lock lock(b->mu);
  auto it = b->index.find(key);
  if (it == b->index.end()) return false;
  {
    std::lock_guard q(buckets_mu_);
    used_bytes_ -= it->second.ref.size_bytes;
  }
  // Blobs are shared by digest across keys; only the index entry goes.
  b->log << json{{"op", "del"}, {"key", std::string(key)}}.dump() << '\n';
  b->log.flush();
  b->index.erase(it);
  return true;
}

std::int64_t ObjectStore::used_bytes() const {
  std::lock_guard lock(buckets_mu_);
  return used_bytes_;
}

}  // namespace edgeflow
