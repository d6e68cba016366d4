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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "edgeflow/metrics/stats.hpp"

namespace edgeflow::bench {

struct SweepRow {
  std::vector<std::string> vars;  // one per SweepReport::var_names
  StatSummary stat;
  std::size_t repeats = 0;  // repeats aggregated (failed ones excluded)
  bool failed = false;
  std::vector<double> extras;  // one per SweepReport::extra_names

  bool operator==(const SweepRow&) const;
};

struct RawRow {
  std::vector<std::string> vars;
  int repeat = 0;
  double value = 0.0;
  bool failed = false;

  bool operator==(const RawRow&) const = default;
};

struct SweepReport {
  std::string experiment;
  std::vector<std::string> var_names;
  std::string measure = "value";
  std::vector<std::string> extra_names;
  std::vector<SweepRow> rows;
  std::vector<RawRow> raw;
  std::map<std::string, std::string> config;
  std::vector<std::string> notes;

  const SweepRow* find(const std::vector<std::string>& vars) const;
  double extra(const SweepRow& row, const std::string& name) const;
  bool operator==(const SweepReport&) const = default;
};

// Aggregates raw rows per var tuple (first-seen order); failed repeats are
// excluded and a tuple with no successful repeat is marked failed.
void aggregate(SweepReport& report);

// Comment lines ('#') carry experiment, measure, config and notes; then a
// header and one row per var tuple. Doubles print in shortest round-trip
// form, so parse_report(to_csv(r), to_raw_csv(r)) == r.
std::string to_csv(const SweepReport& report);
std::string to_raw_csv(const SweepReport& report);
SweepReport parse_report(std::string_view csv, std::string_view raw_csv);

// Writes <dir>/<experiment>.csv and <dir>/<experiment>.raw.csv.
void write_report(const SweepReport& report, const std::filesystem::path& dir);

}  // namespace edgeflow::bench
