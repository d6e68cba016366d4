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

#include "edgeflow/metrics/metric_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>

#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow {

void to_json(json& j, const MetricSample& v) {
  j = json{{"name", v.name}, {"labels", v.labels}, {"value", v.value}, {"ts_ms", v.ts_ms}};
}

void from_json(const json& j, MetricSample& v) {
  v.name = j.at("name").get<std::string>();
  v.labels = j.value("labels", Labels{});
  v.value = j.at("value").get<double>();
  v.ts_ms = j.at("ts_ms").get<std::int64_t>();
}

bool is_metric_name(std::string_view s) {
  if (s.empty()) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':';
    if (!alpha && !(i > 0 && c >= '0' && c <= '9')) return false;
  }
  return true;
}

bool is_label_name(std::string_view s) {
  return is_metric_name(s) && s.find(':') == std::string_view::npos;
}

namespace {

bool labels_match(const Labels& labels, const Labels& filter) {
  for (const auto& [k, v] : filter) {
    auto it = labels.find(k);
    if (it == labels.end() || it->second != v) return false;
  }
  return true;
}

void append_escaped(std::string& out, std::string_view v) {
  for (char c : v) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c == '"') {
      out += "\\\"";
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out.push_back(c);
    }
  }
}

}  // namespace

MetricStore::MetricStore(MetricStoreOptions options) : options_(std::move(options)) {
  if (!options_.log_path) return;
  if (options_.log_path->has_parent_path()) {
    std::filesystem::create_directories(options_.log_path->parent_path());
  }
  {
    std::ifstream in(*options_.log_path);
    for (std::string line; std::getline(in, line);) {
      try {
        insert(json::parse(line).get<MetricSample>());
      } catch (const json::exception&) {
      }
    }
  }
  terminate_partial_line(*options_.log_path);
  log_.open(*options_.log_path, std::ios::app);
}

void MetricStore::insert(const MetricSample& sample) {
  auto& series = series_[{sample.name, sample.labels}];
  auto point = std::make_pair(sample.ts_ms, sample.value);
  if (series.empty() || series.back().first < sample.ts_ms) {
    series.push_back(point);
  } else {
    auto it = std::lower_bound(series.begin(), series.end(), sample.ts_ms,
                               [](const auto& p, std::int64_t ts) { return p.first < ts; });
    if (it != series.end() && it->first == sample.ts_ms) {
      it->second = sample.value;
    } else {
      series.insert(it, point);
    }
  }
  while (series.size() > options_.ring_capacity) series.pop_front();
}

void MetricStore::record(MetricSample sample) {
  if (!std::isfinite(sample.value)) {
    throw Error(Errc::non_finite_value, "metric " + sample.name + " value is not finite");
  }
  if (!is_metric_name(sample.name)) {
    throw Error(Errc::invalid_name, "invalid metric name '" + sample.name + "'");
  }
  for (const auto& [k, _] : sample.labels) {
    if (!is_label_name(k)) throw Error(Errc::invalid_name, "invalid label name '" + k + "'");
  }
  std::unique_lock lock(mu_);
  insert(sample);
  if (log_.is_open()) {
    log_ << json(sample).dump() << '\n';
    log_.flush();
  }
}

std::vector<MetricSample> MetricStore::query_range(const std::string& name, const Labels& filter,
                                                   std::int64_t t0, std::int64_t t1) const {
  std::vector<MetricSample> out;
  std::shared_lock lock(mu_);
  for (auto it = series_.lower_bound({name, Labels{}}); it != series_.end() && it->first.first == name; ++it) {
    if (!labels_match(it->first.second, filter)) continue;
    const auto& s = it->second;
    auto lo = std::lower_bound(s.begin(), s.end(), t0,
                               [](const auto& p, std::int64_t ts) { return p.first < ts; });
    for (; lo != s.end() && lo->first <= t1; ++lo) {
      out.push_back({name, it->first.second, lo->second, lo->first});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const MetricSample& a, const MetricSample& b) {
    return a.ts_ms < b.ts_ms;
  });
  return out;
}

std::optional<MetricSample> MetricStore::latest(const std::string& name, const Labels& filter) {
  std::optional<MetricSample> best;
  std::shared_lock lock(mu_);
  for (auto it = series_.lower_bound({name, Labels{}}); it != series_.end() && it->first.first == name; ++it) {
    if (it->second.empty() || !labels_match(it->first.second, filter)) continue;
    const auto& [ts, value] = it->second.back();
    if (!best || ts > best->ts_ms) best = MetricSample{name, it->first.second, value, ts};
  }
  return best;
}

std::vector<MetricSample> MetricStore::latest_samples() const {
  std::vector<MetricSample> out;
  std::shared_lock lock(mu_);
  for (const auto& [key, s] : series_) {
    if (s.empty()) continue;
    out.push_back({key.first, key.second, s.back().second, s.back().first});
  }
  return out;
}

std::string MetricStore::export_text() const { return format_exposition(latest_samples()); }

std::string format_exposition(std::vector<MetricSample> samples) {
  std::sort(samples.begin(), samples.end(), [](const MetricSample& a, const MetricSample& b) {
    return std::tie(a.name, a.labels) < std::tie(b.name, b.labels);
  });
  std::string out;
  for (const auto& s : samples) {
    out += s.name;
    if (!s.labels.empty()) {
      out.push_back('{');
      bool first = true;
      for (const auto& [k, v] : s.labels) {
        if (!first) out.push_back(',');
        first = false;
        out += k;
        out += "=\"";
        append_escaped(out, v);
        out.push_back('"');
      }
      out.push_back('}');
    }
    out.push_back(' ');
    out += format_double(s.value);
    out.push_back(' ');
    out += std::to_string(s.ts_ms);
    out.push_back('\n');
  }
  return out;
}

std::vector<MetricSample> parse_exposition(std::string_view text) {
  std::vector<MetricSample> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty() || line.front() == '#') continue;

    auto fail = [&](const char* why) {
      return Error(Errc::parse_error, "exposition line " + std::to_string(line_no) + ": " + why);
    };
    MetricSample s;
    std::size_t i = 0;
    while (i < line.size() && line[i] != '{' && line[i] != ' ') ++i;
    s.name = std::string(line.substr(0, i));
    if (!is_metric_name(s.name)) throw fail("bad metric name");
    if (i < line.size() && line[i] == '{') {
      ++i;
      while (i < line.size() && line[i] != '}') {
        std::size_t eq = line.find('=', i);
        if (eq == std::string_view::npos) throw fail("missing '='");
        std::string key(line.substr(i, eq - i));
        if (!is_label_name(key)) throw fail("bad label name");
        i = eq + 1;
        if (i >= line.size() || line[i] != '"') throw fail("expected quote");
        ++i;
        std::string value;
        while (i < line.size() && line[i] != '"') {
          if (line[i] == '\\' && i + 1 < line.size()) {
            char e = line[i + 1];
            value.push_back(e == 'n' ? '\n' : e);
            i += 2;
          } else {
            value.push_back(line[i++]);
          }
        }
        if (i >= line.size()) throw fail("unterminated label value");
        ++i;
        s.labels[key] = std::move(value);
        if (i < line.size() && line[i] == ',') ++i;
      }
      if (i >= line.size()) throw fail("unterminated label set");
      ++i;
    }
    if (i >= line.size() || line[i] != ' ') throw fail("expected value");
    ++i;
    auto sp = line.find(' ', i);
    if (sp == std::string_view::npos) throw fail("expected timestamp");
    auto vstr = line.substr(i, sp - i);
    auto [vp, vec] = std::from_chars(vstr.data(), vstr.data() + vstr.size(), s.value);
    if (vec != std::errc() || vp != vstr.data() + vstr.size()) throw fail("bad value");
    auto tstr = line.substr(sp + 1);
    auto [tp, tec] = std::from_chars(tstr.data(), tstr.data() + tstr.size(), s.ts_ms);
    if (tec != std::errc() || tp != tstr.data() + tstr.size()) throw fail("bad timestamp");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace edgeflow
