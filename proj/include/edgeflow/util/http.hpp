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

#include <httplib.h>

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "edgeflow/core/serialize.hpp"
#include "edgeflow/error.hpp"

namespace edgeflow::http {

int status_for(Errc code);
Errc errc_from_name(std::string_view name);

void reply_json(httplib::Response& res, const json& body, int status = 200);
void reply_error(httplib::Response& res, const Error& err);

// Wraps a handler so Error and JSON exceptions become structured replies.
httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> fn);

// Thin client over one base URL ("http://host:port"). Transport failures
// raise Errc::unavailable; error replies are mapped back onto their Errc.
class Client {
 public:
  explicit Client(const std::string& base_url, int timeout_ms = 30'000);

  httplib::Result get(const std::string& path, const httplib::Headers& headers = {});
  httplib::Result post(const std::string& path, std::string_view body,
                       const std::string& content_type = "application/json");
  httplib::Result put(const std::string& path, std::string_view body,
                      const std::string& content_type = "application/octet-stream");
  httplib::Result del(const std::string& path);

  // Throws unless the reply is 2xx.
  static const httplib::Response& check(const httplib::Result& r, const std::string& what);
  json get_json(const std::string& path);
  json post_json(const std::string& path, const json& body);

  const std::string& base_url() const { return base_url_; }

 private:
  std::string base_url_;
  std::unique_ptr<httplib::Client> client_;
};

std::string url_encode(std::string_view s);

}  // namespace edgeflow::http
