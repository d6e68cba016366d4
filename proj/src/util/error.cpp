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

#include "edgeflow/error.hpp"

namespace edgeflow {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_name: return "InvalidName";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::not_found: return "NotFound";
    case Errc::digest_mismatch: return "DigestMismatch";
    case Errc::storage_full: return "StorageFull";
    case Errc::payload_too_large: return "PayloadTooLarge";
    case Errc::no_such_stage_assignment: return "NoSuchStageAssignment";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::unknown_workflow: return "UnknownWorkflow";
    case Errc::duplicate_node: return "DuplicateNode";
    case Errc::unschedulable: return "Unschedulable";
    case Errc::protocol_violation: return "ProtocolViolation";
    case Errc::timeout: return "Timeout";
    case Errc::no_live_replica: return "NoLiveReplica";
    case Errc::replica_failure: return "ReplicaFailure";
    case Errc::empty_input: return "EmptyInput";
    case Errc::non_finite_value: return "NonFiniteValue";
    case Errc::metric_store_unavailable: return "MetricStoreUnavailable";
    case Errc::parse_error: return "ParseError";
    case Errc::io_error: return "IoError";
    case Errc::unavailable: return "Unavailable";
  }
  return "Unknown";
}

bool is_user_error(Errc code) {
  switch (code) {
    case Errc::io_error:
    case Errc::unavailable:
    case Errc::digest_mismatch:
    case Errc::metric_store_unavailable:
    case Errc::replica_failure:
    case Errc::timeout:
      return false;
    default:
      return true;
  }
}

}  // namespace edgeflow
