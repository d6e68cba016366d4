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

#include "edgeflow/bench/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "edgeflow/error.hpp"
#include "edgeflow/util/util.hpp"

namespace edgeflow::bench {

namespace {

bool same_double(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error(Errc::parse_error, "bad number '" + s + "' in report");
  }
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error(Errc::parse_error, "bad count '" + s + "' in report");
  }
  return v;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    auto nl = text.find('\n');
    out.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

std::string header_block(const SweepReport& r) {
  std::string out = "# experiment=" + r.experiment + "\n# measure=" + r.measure + "\n";
  for (const auto& [k, v] : r.config) out += "# config." + k + "=" + v + "\n";
  for (const auto& n : r.notes) out += "# note=" + n + "\n";
  return out;
}

}  // namespace

bool SweepRow::operator==(const SweepRow& o) const {
  if (vars != o.vars || repeats != o.repeats || failed != o.failed || stat.n != o.stat.n) return false;
  if (!same_double(stat.mean, o.stat.mean) || !same_double(stat.stddev, o.stat.stddev)) return false;
  if (extras.size() != o.extras.size()) return false;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    if (!same_double(extras[i], o.extras[i])) return false;
  }
  return true;
}

const SweepRow* SweepReport::find(const std::vector<std::string>& vars) const {
  for (const auto& r : rows) {
    if (r.vars == vars) return &r;
  }
  return nullptr;
}

double SweepReport::extra(const SweepRow& row, const std::string& name) const {
  auto it = std::find(extra_names.begin(), extra_names.end(), name);
  if (it == extra_names.end()) throw Error(Errc::not_found, "no extra column " + name);
  return row.extras.at(static_cast<std::size_t>(it - extra_names.begin()));
}

void aggregate(SweepReport& report) {
  std::vector<std::vector<std::string>> order;
  for (const auto& raw : report.raw) {
    if (std::find(order.begin(), order.end(), raw.vars) == order.end()) order.push_back(raw.vars);
  }
  std::vector<SweepRow> rows;
  for (const auto& vars : order) {
    SweepRow row;
    row.vars = vars;
    std::vector<double> values;
    for (const auto& raw : report.raw) {
      if (raw.vars == vars && !raw.failed) values.push_back(raw.value);
    }
    row.repeats = values.size();
    if (values.empty()) {
      row.failed = true;
      row.stat = StatSummary{std::nan(""), std::nan(""), 0};
    } else {
      row.stat = mean_std(values);
    }
    if (const auto* prev = report.find(vars)) row.extras = prev->extras;
    row.extras.resize(report.extra_names.size(), std::nan(""));
    rows.push_back(std::move(row));
  }
  report.rows = std::move(rows);
}

std::string to_csv(const SweepReport& r) {
  std::string out = header_block(r);
  for (const auto& v : r.var_names) out += escape(v) + ",";
  out += "mean,stddev,n,repeats,failed";
  for (const auto& e : r.extra_names) out += "," + escape(e);
  out += "\n";
  for (const auto& row : r.rows) {
    for (const auto& v : row.vars) out += escape(v) + ",";
    out += format_double(row.stat.mean) + "," + format_double(row.stat.stddev) + "," +
           std::to_string(row.stat.n) + "," + std::to_string(row.repeats) + "," +
           (row.failed ? "1" : "0");
    for (double e : row.extras) out += "," + format_double(e);
    out += "\n";
  }
  return out;
}

std::string to_raw_csv(const SweepReport& r) {
  std::string out = header_block(r);
  for (const auto& v : r.var_names) out += escape(v) + ",";
  out += "repeat,value,failed\n";
  for (const auto& raw : r.raw) {
    for (const auto& v : raw.vars) out += escape(v) + ",";
    out += std::to_string(raw.repeat) + "," + format_double(raw.value) + "," + (raw.failed ? "1" : "0") + "\n";
  }
  return out;
}

SweepReport parse_report(std::string_view csv, std::string_view raw_csv) {
  SweepReport r;
  bool header_seen = false;
  for (auto line : lines_of(csv)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body = line.substr(2);
      auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      std::string key(body.substr(0, eq));
      std::string value(body.substr(eq + 1));
      if (key == "experiment") {
        r.experiment = value;
      } else if (key == "measure") {
        r.measure = value;
      } else if (key == "note") {
        r.notes.push_back(value);
      } else if (key.rfind("config.", 0) == 0) {
        r.config[key.substr(7)] = value;
      }
      continue;
    }
    auto fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      auto mean = std::find(fields.begin(), fields.end(), "mean");
      if (mean == fields.end() || fields.end() - mean < 5) throw Error(Errc::parse_error, "report header lacks stats columns");
      r.var_names.assign(fields.begin(), mean);
      r.extra_names.assign(mean + 5, fields.end());
      continue;
    }
    std::size_t nv = r.var_names.size();
    if (fields.size() != nv + 5 + r.extra_names.size()) throw Error(Errc::parse_error, "report row has wrong arity");
    SweepRow row;
    row.vars.assign(fields.begin(), fields.begin() + static_cast<std::ptrdiff_t>(nv));
    row.stat.mean = parse_double(fields[nv]);
    row.stat.stddev = parse_double(fields[nv + 1]);
    row.stat.n = parse_size(fields[nv + 2]);
    row.repeats = parse_size(fields[nv + 3]);
    row.failed = fields[nv + 4] == "1";
    for (std::size_t i = nv + 5; i < fields.size(); ++i) row.extras.push_back(parse_double(fields[i]));
    r.rows.push_back(std::move(row));
  }

  header_seen = false;
  for (auto line : lines_of(raw_csv)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto fields = split_csv_line(line);
    std::size_t nv = r.var_names.size();
    if (fields.size() != nv + 3) throw Error(Errc::parse_error, "raw row has wrong arity");
    RawRow raw;
    raw.vars.assign(fields.begin(), fields.begin() + static_cast<std::ptrdiff_t>(nv));
    raw.repeat = static_cast<int>(parse_size(fields[nv]));
    raw.value = parse_double(fields[nv + 1]);
    raw.failed = fields[nv + 2] == "1";
    r.raw.push_back(std::move(raw));
  }
  return r;
}

void write_report(const SweepReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / (report.experiment + ".csv"), to_csv(report));
  write_file_atomic(dir / (report.experiment + ".raw.csv"), to_raw_csv(report));
}

}  // namespace edgeflow::bench
