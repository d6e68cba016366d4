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

#include "edgeflow/core/cadence.hpp"

#include <charconv>
#include <chrono>
#include <sstream>
#include <vector>

namespace edgeflow {

namespace {

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Parses one cron field into `bits` over [lo, hi].
template <std::size_t N>
bool parse_field(std::string_view field, int lo, int hi, std::bitset<N>& bits, bool& star) {
  star = field == "*";
  std::size_t start = 0;
  while (start <= field.size()) {
    std::size_t comma = field.find(',', start);
    std::string_view part = field.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (part.empty()) return false;

    int step = 1;
    if (auto slash = part.find('/'); slash != std::string_view::npos) {
      auto s = to_int(part.substr(slash + 1));
      if (!s || *s < 1) return false;
      step = *s;
      part = part.substr(0, slash);
    }
    int from = lo;
    int to = hi;
    if (part != "*") {
      if (auto dash = part.find('-'); dash != std::string_view::npos) {
        auto a = to_int(part.substr(0, dash));
        auto b = to_int(part.substr(dash + 1));
        if (!a || !b) return false;
        from = *a;
        to = *b;
      } else {
        auto a = to_int(part);
        if (!a) return false;
        from = *a;
        to = step > 1 ? hi : *a;
      }
    }
    if (from < lo || to > hi || from > to) return false;
    for (int v = from; v <= to; v += step) bits.set(static_cast<std::size_t>(v));

    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return true;
}

}  // namespace

std::optional<Cadence> Cadence::parse(std::string_view text) {
  Cadence c;
  if (text.starts_with("@every")) {
    std::string_view rest = text.substr(6);
    while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    if (rest.size() < 2) return std::nullopt;
    char unit = rest.back();
    auto n = to_int(rest.substr(0, rest.size() - 1));
    if (!n || *n < 1) return std::nullopt;
    std::int64_t scale = unit == 's' ? 1000 : unit == 'm' ? 60'000 : unit == 'h' ? 3'600'000 : 0;
    if (scale == 0) return std::nullopt;
    c.interval_ms_ = *n * scale;
    return c;
  }

  std::istringstream in{std::string(text)};
  std::vector<std::string> fields;
  for (std::string f; in >> f;) fields.push_back(f);
  if (fields.size() != 5) return std::nullopt;
  bool star = false;
  if (!parse_field(fields[0], 0, 59, c.minutes_, star)) return std::nullopt;
  if (!parse_field(fields[1], 0, 23, c.hours_, star)) return std::nullopt;
  if (!parse_field(fields[2], 1, 31, c.days_, c.dom_star_)) return std::nullopt;
  if (!parse_field(fields[3], 1, 12, c.months_, star)) return std::nullopt;
  if (!parse_field(fields[4], 0, 7, c.weekdays_, c.dow_star_)) return std::nullopt;
  return c;
}

std::int64_t Cadence::next_after(std::int64_t after_ms, std::int64_t anchor_ms) const {
  if (interval_ms_ > 0) {
    if (after_ms < anchor_ms) return anchor_ms;
    std::int64_t k = (after_ms - anchor_ms) / interval_ms_ + 1;
    return anchor_ms + k * interval_ms_;
  }

  using namespace std::chrono;
  constexpr std::int64_t kMinute = 60'000;
  std::int64_t t = (after_ms / kMinute + 1) * kMinute;
  // Five years of minutes bounds the search for satisfiable expressions.
  for (std::int64_t i = 0; i < 5 * 366 * 24 * 60; ++i, t += kMinute) {
    sys_days day = floor<days>(sys_time<milliseconds>(milliseconds(t)));
    year_month_day ymd{day};
    auto month = static_cast<unsigned>(ymd.month());
    if (!months_.test(month)) {
      continue;
    }
    auto dom = static_cast<unsigned>(ymd.day());
    unsigned dow = weekday{day}.c_encoding();
    bool dom_ok = days_.test(dom);
    bool dow_ok = weekdays_.test(dow) || (dow == 0 && weekdays_.test(7));
    // Cron semantics: when both day fields are restricted, either may match.
    bool day_ok = dom_star_ && dow_star_ ? true
                  : dom_star_           ? dow_ok
                  : dow_star_           ? dom_ok
                                        : (dom_ok || dow_ok);
    if (!day_ok) continue;
    std::int64_t minute_of_day = (t - duration_cast<milliseconds>(day.time_since_epoch()).count()) / kMinute;
    if (hours_.test(static_cast<std::size_t>(minute_of_day / 60)) &&
        minutes_.test(static_cast<std::size_t>(minute_of_day % 60))) {
      return t;
    }
  }
  return -1;
}

}  // namespace edgeflow
