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

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgeflow {

enum class Errc {
  invalid_name,
  invalid_argument,
  not_found,
  digest_mismatch,
  storage_full,
  payload_too_large,
  no_such_stage_assignment,
  invalid_spec,
  unknown_workflow,
  duplicate_node,
  unschedulable,
  protocol_violation,
  timeout,
  no_live_replica,
  replica_failure,
  empty_input,
  non_finite_value,
  metric_store_unavailable,
  parse_error,
  io_error,
  unavailable,
};

std::string_view errc_name(Errc code);

// Every module reports failures as an Error carrying a stable code; HTTP
// layers map the code onto a status, the CLI onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// True for errors caused by bad caller input rather than system faults.
bool is_user_error(Errc code);

}  // namespace edgeflow
