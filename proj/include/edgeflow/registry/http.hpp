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

#include "edgeflow/registry/registry.hpp"

namespace httplib {
class Server;
}

namespace edgeflow {

// POST /v1/models/{name}          register (raw body = payload; X-Metadata
//                                 JSON object and X-Tags comma list headers)
// GET  /v1/models                 names
// GET  /v1/models/{name}          all versions, or ?tag= / ?stage= resolution
// GET  /v1/models/{name}/latest | /v{n}
// POST /v1/models/{name}/v{n}/stage   {"stage": "..."}
// GET  /v1/models/{name}/v{n}/package
void mount_registry_routes(httplib::Server& server, Registry& registry);

}  // namespace edgeflow
