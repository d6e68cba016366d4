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

#include "edgeflow/metrics/http.hpp"

#include <limits>

#include "edgeflow/util/http.hpp"

namespace edgeflow {

void mount_metrics_routes(httplib::Server& server, MetricStore& store) {
  server.Get("/v1/metrics", http::guarded([&store](const auto&, auto& res) {
    res.set_content(store.export_text(), "text/plain; version=0.0.4");
  }));
  server.Get("/v1/metrics/query", http::guarded([&store](const auto& req, auto& res) {
    auto name = req.get_param_value("name");
    if (name.empty()) throw Error(Errc::invalid_argument, "name is required");
    std::int64_t from = std::numeric_limits<std::int64_t>::min();
    std::int64_t to = std::numeric_limits<std::int64_t>::max();
    if (req.has_param("from")) from = std::stoll(req.get_param_value("from"));
    if (req.has_param("to")) to = std::stoll(req.get_param_value("to"));
    Labels filter;
    for (const auto& [k, v] : req.params) {
      if (k.rfind("label.", 0) == 0) filter[k.substr(6)] = v;
    }
    http::reply_json(res, json{{"samples", store.query_range(name, filter, from, to)}});
  }));
  server.Post("/v1/metrics", http::guarded([&store](const auto& req, auto& res) {
    std::vector<MetricSample> samples;
    if (req.get_header_value("Content-Type").rfind("text/plain", 0) == 0) {
      samples = parse_exposition(req.body);
    } else {
      auto body = parse_json(req.body);
      if (body.is_array()) {
        samples = body.template get<std::vector<MetricSample>>();
      } else {
        samples.push_back(body.template get<MetricSample>());
      }
    }
    for (auto& s : samples) store.record(std::move(s));
    http::reply_json(res, json{{"recorded", samples.size()}}, 202);
  }));
}

}  // namespace edgeflow
