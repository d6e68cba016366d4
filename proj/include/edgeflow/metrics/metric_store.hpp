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

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgeflow/core/serialize.hpp"
#include "edgeflow/core/types.hpp"

namespace edgeflow {

struct MetricSample {
  std::string name;
  Labels labels;
  double value = 0.0;
  std::int64_t ts_ms = 0;

  bool operator==(const MetricSample&) const = default;
};

void to_json(json& j, const MetricSample& v);
void from_json(const json& j, MetricSample& v);

// Read side used by triggers; remote implementations may throw
// Errc::metric_store_unavailable.
class MetricSource {
 public:
  virtual ~MetricSource() = default;
  // Latest sample of any series named `name` whose labels include `filter`.
  virtual std::optional<MetricSample> latest(const std::string& name, const Labels& filter) = 0;
};

struct MetricStoreOptions {
  std::size_t ring_capacity = 100'000;  // per series
  std::optional<std::filesystem::path> log_path;
};

class MetricStore : public MetricSource {
 public:
  explicit MetricStore(MetricStoreOptions options = {});

  // Rejects non-finite values. A sample with an already-recorded
  // (name, labels, ts) replaces the old value.
  void record(MetricSample sample);
  void record(const std::string& name, Labels labels, double value, std::int64_t ts_ms) {
    record(MetricSample{name, std::move(labels), value, ts_ms});
  }

  // Samples with t0 <= ts <= t1 from every matching series, ascending by ts
  // (ties by labels).
  std::vector<MetricSample> query_range(const std::string& name, const Labels& filter,
                                        std::int64_t t0, std::int64_t t1) const;
  std::optional<MetricSample> latest(const std::string& name, const Labels& filter) override;
  // One sample per series, sorted by name then labels.
  std::vector<MetricSample> latest_samples() const;
  std::string export_text() const;

 private:
  using SeriesKey = std::pair<std::string, Labels>;
  using Series = std::deque<std::pair<std::int64_t, double>>;

  void insert(const MetricSample& sample);

  MetricStoreOptions options_;
  mutable std::shared_mutex mu_;
  std::map<SeriesKey, Series> series_;
  std::ofstream log_;
};

bool is_metric_name(std::string_view s);
bool is_label_name(std::string_view s);

// Text exposition: one `name{k="v",...} value ts_ms` line per sample, names
// and labels sorted. parse_exposition(format_exposition(x)) == x.
std::string format_exposition(std::vector<MetricSample> samples);
std::vector<MetricSample> parse_exposition(std::string_view text);

}  // namespace edgeflow
