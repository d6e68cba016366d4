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

#include <array>
#include <bitset>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace edgeflow {

// Either "@every <N><s|m|h>" or a five-field cron expression
// (minute hour day-of-month month day-of-week, UTC) supporting `*`, lists,
// ranges and `/step`.
class Cadence {
 public:
  static std::optional<Cadence> parse(std::string_view text);

  // First fire time strictly after `after_ms`. For interval cadences the
  // sequence is anchored at `anchor_ms`.
  std::int64_t next_after(std::int64_t after_ms, std::int64_t anchor_ms = 0) const;

  bool is_interval() const { return interval_ms_ > 0; }
  std::int64_t interval_ms() const { return interval_ms_; }

 private:
  std::int64_t interval_ms_ = 0;
  std::bitset<60> minutes_;
  std::bitset<24> hours_;
  std::bitset<32> days_;
  std::bitset<13> months_;
  std::bitset<8> weekdays_;  // 0 and 7 are Sunday
  bool dom_star_ = true;
  bool dow_star_ = true;
};

}  // namespace edgeflow
