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

#include "edgeflow/metrics/stats.hpp"

#include <cmath>
#include <map>

#include "edgeflow/error.hpp"

namespace edgeflow {

namespace {

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

}  // namespace

StatSummary mean_std(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::empty_input, "mean_std needs at least one value");
  StatSummary s;
  s.n = values.size();
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  s.mean = sum.value() / static_cast<double>(s.n);
  if (s.n == 1) return s;

  CompensatedSum sq;
  CompensatedSum dev;
  for (double v : values) {
    double d = v - s.mean;
    sq.add(d * d);
    dev.add(d);
  }
  // Second term corrects the residual rounding error in the mean.
  double n = static_cast<double>(s.n);
  double var = (sq.value() - dev.value() * dev.value() / n) / (n - 1.0);
  s.stddev = var > 0.0 ? std::sqrt(var) : 0.0;
  return s;
}

std::vector<StageAverage> stage_average(std::span<const TimedValue> series,
                                        std::span<const StageTiming> stages) {
  std::map<StageKind, std::vector<const StageTiming*>> by_kind;
  for (const auto& st : stages) by_kind[st.stage].push_back(&st);

  std::vector<StageAverage> out;
  for (const auto& [kind, intervals] : by_kind) {
    StageAverage avg;
    avg.stage = kind;
    CompensatedSum sum;
    for (const auto& sample : series) {
      for (const auto* st : intervals) {
        if (sample.ts_ms >= st->start_ms && sample.ts_ms < st->end_ms) {
          sum.add(sample.value);
          ++avg.samples;
          break;
        }
      }
    }
    if (avg.samples > 0) avg.mean = sum.value() / static_cast<double>(avg.samples);
    out.push_back(avg);
  }
  return out;
}

}  // namespace edgeflow
