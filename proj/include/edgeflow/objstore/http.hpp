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

#include <string>

#include "edgeflow/objstore/object_store.hpp"

namespace httplib {
class Server;
}

namespace edgeflow {

// PUT/GET/DELETE /v1/obj/{bucket}/{key}, GET /v1/obj/{bucket}?prefix=.
// Object replies carry X-Digest and X-Size headers.
void mount_objstore_routes(httplib::Server& server, ObjectStore& store);

class HttpBlobStore : public BlobStore {
 public:
  explicit HttpBlobStore(std::string base_url);

  ArtifactRef put(std::string_view bucket, std::string_view key, std::string_view bytes,
                  std::string_view content_type = "application/octet-stream") override;
  StoredObject get(std::string_view bucket, std::string_view key) override;
  std::optional<ObjectRecord> stat(std::string_view bucket, std::string_view key) override;
  std::vector<std::string> list(std::string_view bucket, std::string_view prefix = {}) override;
  bool remove(std::string_view bucket, std::string_view key) override;

 private:
  std::string base_url_;
};

}  // namespace edgeflow
