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

#include "edgeflow/metrics/metric_store.hpp"

namespace httplib {
class Server;
}

namespace edgeflow {

// GET  /v1/metrics                              text exposition
// GET  /v1/metrics/query?name=&from=&to=[&label.<k>=<v>]
// POST /v1/metrics                              JSON sample, JSON array, or
//                                               exposition text
void mount_metrics_routes(httplib::Server& server, MetricStore& store);

}  // namespace edgeflow
