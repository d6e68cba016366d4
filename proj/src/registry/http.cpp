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

#include "edgeflow/registry/http.hpp"

#include "edgeflow/util/http.hpp"

namespace edgeflow {

namespace {

std::set<std::string> parse_tags(const std::string& header) {
  std::set<std::string> tags;
  std::size_t start = 0;
  while (start <= header.size()) {
    auto comma = header.find(',', start);
    auto tag = header.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    while (!tag.empty() && tag.front() == ' ') tag.erase(tag.begin());
    while (!tag.empty() && tag.back() == ' ') tag.pop_back();
    if (!tag.empty()) tags.insert(tag);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return tags;
}

}  // namespace

void mount_registry_routes(httplib::Server& server, Registry& registry) {
  server.Post(R"(/v1/models/([^/]+))", http::guarded([&registry](const auto& req, auto& res) {
    std::map<std::string, std::string> metadata;
    if (req.has_header("X-Metadata")) {
      metadata = parse_json(req.get_header_value("X-Metadata")).template get<std::map<std::string, std::string>>();
    }
    auto tags = parse_tags(req.get_header_value("X-Tags"));
    auto rec = registry.register_model(req.matches[1].str(), req.body, std::move(metadata), std::move(tags));
    http::reply_json(res, json(rec), 201);
  }));
  server.Get("/v1/models", http::guarded([&registry](const auto&, auto& res) {
    http::reply_json(res, json{{"models", registry.names()}});
  }));
  server.Get(R"(/v1/models/([^/]+))", http::guarded([&registry](const auto& req, auto& res) {
    auto name = req.matches[1].str();
    if (req.has_param("tag")) {
      http::reply_json(res, json(registry.resolve(ModelSelector::by_tag(name, req.get_param_value("tag")))));
    } else if (req.has_param("stage")) {
      auto stage = parse_model_stage(req.get_param_value("stage"));
      http::reply_json(res, json(registry.resolve(ModelSelector::in_stage(name, stage))));
    } else {
      auto versions = registry.versions(name);
      if (versions.empty()) throw Error(Errc::not_found, "no model named '" + name + "'");
      http::reply_json(res, json{{"name", name}, {"versions", versions}});
    }
  }));
  server.Get(R"(/v1/models/([^/]+)/latest)", http::guarded([&registry](const auto& req, auto& res) {
    http::reply_json(res, json(registry.resolve(ModelSelector::latest(req.matches[1].str()))));
  }));
  server.Get(R"(/v1/models/([^/]+)/v(\d+))", http::guarded([&registry](const auto& req, auto& res) {
    auto sel = ModelSelector::at_version(req.matches[1].str(), std::stoi(req.matches[2].str()));
    http::reply_json(res, json(registry.resolve(sel)));
  }));
  server.Post(R"(/v1/models/([^/]+)/v(\d+)/stage)", http::guarded([&registry](const auto& req, auto& res) {
    auto body = parse_json(req.body);
    auto stage = parse_model_stage(body.at("stage").template get<std::string>());
    auto rec = registry.set_stage(req.matches[1].str(), std::stoi(req.matches[2].str()), stage);
    http::reply_json(res, json(rec));
  }));
  server.Get(R"(/v1/models/([^/]+)/v(\d+)/package)", http::guarded([&registry](const auto& req, auto& res) {
    auto name = req.matches[1].str();
    auto version = std::stoi(req.matches[2].str());
    res.set_header("Content-Disposition",
                   "attachment; filename=\"" + name + "-v" + std::to_string(version) + ".zip\"");
    res.set_content(registry.package_model(name, version), "application/zip");
  }));
}

}  // namespace edgeflow
