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

#include <string>
#include <string_view>
#include <vector>

namespace edgeflow::zip {

struct Entry {
  std::string name;
  std::string data;
};

// Stored (uncompressed) archive. Entries are written sorted by name with a
// fixed 1980-01-01 00:00 timestamp, so equal inputs give equal bytes.
std::string write_stored(std::vector<Entry> entries);

// Reads archives produced by write_stored (method 0 only); verifies CRC-32.
std::vector<Entry> read_stored(std::string_view archive);

}  // namespace edgeflow::zip
