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
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace edgeflow {

using Clock = std::function<std::int64_t()>;

// Wall-clock epoch milliseconds.
std::int64_t now_ms();

// Monotonic milliseconds, fractional.
double steady_ms();

// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

// Incremental SHA-256 for multi-part canonical encodings.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view bytes);
  // Length-prefixed field, so ("ab","c") and ("a","bc") hash differently.
  Sha256& field(std::string_view bytes);
  std::string hex();

 private:
  void* ctx_;
};

// [a-z0-9._-]{1,max_len}
bool is_identifier(std::string_view s, std::size_t max_len = 128);

std::string read_file(const std::filesystem::path& path);
// Writes via a temp file + rename so readers never see partial content.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Appends a newline if the file ends mid-line, so the next append to a
// line-oriented log doesn't fuse with a torn record.
void terminate_partial_line(const std::filesystem::path& path);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

std::vector<std::string> split_command(std::string_view command);

}  // namespace edgeflow
