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

#include "edgeflow/objstore/http.hpp"

#include "edgeflow/util/http.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

namespace {

void set_object_headers(httplib::Response& res, const ObjectRecord& rec) {
  res.set_header("X-Digest", rec.ref.digest);
  res.set_header("X-Size", std::to_string(rec.ref.size_bytes));
  res.set_header("X-Created-Ms", std::to_string(rec.created_ms));
}

}  // namespace

void mount_objstore_routes(httplib::Server& server, ObjectStore& store) {
  server.Put(R"(/v1/obj/([^/]+)/([^/]+))", http::guarded([&store](const auto& req, auto& res) {
    auto content_type = req.get_header_value("Content-Type");
    if (content_type.empty()) content_type = "application/octet-stream";
    auto ref = store.put(req.matches[1].str(), req.matches[2].str(), req.body, content_type);
    res.set_header("X-Digest", ref.digest);
    res.set_header("X-Size", std::to_string(ref.size_bytes));
    http::reply_json(res, json(ref), 201);
  }));
  server.Get(R"(/v1/obj/([^/]+)/([^/]+))", http::guarded([&store](const auto& req, auto& res) {
    auto obj = store.get(req.matches[1].str(), req.matches[2].str());
    set_object_headers(res, obj.record);
    res.set_content(std::move(obj.bytes), obj.record.content_type);
  }));
  server.Delete(R"(/v1/obj/([^/]+)/([^/]+))", http::guarded([&store](const auto& req, auto& res) {
    if (!store.remove(req.matches[1].str(), req.matches[2].str())) {
      throw Error(Errc::not_found, "no such object");
    }
    res.status = 204;
  }));
  server.Get(R"(/v1/obj/([^/]+))", http::guarded([&store](const auto& req, auto& res) {
    auto keys = store.list(req.matches[1].str(), req.get_param_value("prefix"));
    http::reply_json(res, json{{"keys", keys}});
  }));
}

HttpBlobStore::HttpBlobStore(std::string base_url) : base_url_(std::move(base_url)) {}

ArtifactRef HttpBlobStore::put(std::string_view bucket, std::string_view key,
                               std::string_view bytes, std::string_view content_type) {
  http::Client c(base_url_);
  auto path = "/v1/obj/" + std::string(bucket) + "/" + std::string(key);
  auto r = c.put(path, bytes, std::string(content_type));
  return parse_json(http::Client::check(r, "PUT " + path).body).get<ArtifactRef>();
}

StoredObject HttpBlobStore::get(std::string_view bucket, std::string_view key) {
  http::Client c(base_url_);
  auto path = "/v1/obj/" + std::string(bucket) + "/" + std::string(key);
  auto r = c.get(path);
  const auto& res = http::Client::check(r, "GET " + path);
  StoredObject obj;
  obj.bytes = res.body;
  obj.record.ref = {std::string(bucket), std::string(key), res.get_header_value("X-Digest"),
                    static_cast<std::int64_t>(res.body.size())};
  obj.record.created_ms = res.has_header("X-Created-Ms") ? std::stoll(res.get_header_value("X-Created-Ms")) : 0;
  obj.record.content_type = res.get_header_value("Content-Type");
  if (sha256_hex(obj.bytes) != obj.record.ref.digest) {
    throw Error(Errc::digest_mismatch, "transfer corrupted " + path);
  }
  return obj;
}

std::optional<ObjectRecord> HttpBlobStore::stat(std::string_view bucket, std::string_view key) {
  try {
    return get(bucket, key).record;
  } catch (const Error& e) {
    if (e.code() == Errc::not_found) return std::nullopt;
    throw;
  }
}

std::vector<std::string> HttpBlobStore::list(std::string_view bucket, std::string_view prefix) {
  http::Client c(base_url_);
  auto j = c.get_json("/v1/obj/" + std::string(bucket) + "?prefix=" + http::url_encode(prefix));
  return j.at("keys").get<std::vector<std::string>>();
}

bool HttpBlobStore::remove(std::string_view bucket, std::string_view key) {
  http::Client c(base_url_);
  auto r = c.del("/v1/obj/" + std::string(bucket) + "/" + std::string(key));
  if (r && r->status == 404) return false;
  http::Client::check(r, "DELETE");
  return true;
}

}  // namespace edgeflow
