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

#include "edgeflow/util/zip.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdint>

#include "edgeflow/error.hpp"

namespace edgeflow::zip {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get16(std::string_view in, std::size_t at) {
  if (at + 2 > in.size()) throw Error(Errc::parse_error, "zip: truncated");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(in[at]) |
                                    (static_cast<unsigned char>(in[at + 1]) << 8));
}

std::uint32_t get32(std::string_view in, std::size_t at) {
  return static_cast<std::uint32_t>(get16(in, at)) |
         (static_cast<std::uint32_t>(get16(in, at + 2)) << 16);
}

std::uint32_t crc_of(std::string_view data) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()),
              static_cast<uInt>(data.size())));
}

}  // namespace

std::string write_stored(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.name < b.name; });
  std::string out;
  std::string central;
  for (const auto& e : entries) {
    auto offset = static_cast<std::uint32_t>(out.size());
    std::uint32_t crc = crc_of(e.data);
    auto size = static_cast<std::uint32_t>(e.data.size());
    auto name_len = static_cast<std::uint16_t>(e.name.size());

    put32(out, kLocalSig);
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, 0);   // method: stored
    put16(out, kDosTime);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, name_len);
    put16(out, 0);
    out += e.name;
    out += e.data;

    put32(central, kCentralSig);
    put16(central, 20);  // version made by
    put16(central, 20);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosTime);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, name_len);
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central += e.name;
  }
  auto central_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, central_offset);
  put16(out, 0);
  return out;
}

std::vector<Entry> read_stored(std::string_view archive) {
  if (archive.size() < 22) throw Error(Errc::parse_error, "zip: too short");
  std::size_t eocd = archive.size() - 22;
  if (get32(archive, eocd) != kEndSig) {
    throw Error(Errc::parse_error, "zip: missing end record");
  }
  std::uint16_t count = get16(archive, eocd + 10);
  std::size_t pos = get32(archive, eocd + 16);
  std::vector<Entry> entries;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (get32(archive, pos) != kCentralSig) {
      throw Error(Errc::parse_error, "zip: bad central header");
    }
    std::uint16_t method = get16(archive, pos + 10);
    std::uint32_t crc = get32(archive, pos + 16);
    std::uint32_t size = get32(archive, pos + 20);
    std::uint16_t name_len = get16(archive, pos + 28);
    std::uint16_t extra_len = get16(archive, pos + 30);
    std::uint16_t comment_len = get16(archive, pos + 32);
    std::uint32_t local = get32(archive, pos + 42);
    if (method != 0) throw Error(Errc::parse_error, "zip: compressed entry");
    if (pos + 46 + name_len > archive.size()) {
      throw Error(Errc::parse_error, "zip: truncated name");
    }
    Entry e;
    e.name = std::string(archive.substr(pos + 46, name_len));
    std::uint16_t lname = get16(archive, local + 26);
    std::uint16_t lextra = get16(archive, local + 28);
    std::size_t data_at = local + 30 + lname + lextra;
    if (data_at + size > archive.size()) {
      throw Error(Errc::parse_error, "zip: truncated data");
    }
    e.data = std::string(archive.substr(data_at, size));
    if (crc_of(e.data) != crc) throw Error(Errc::parse_error, "zip: crc mismatch");
    entries.push_back(std::move(e));
    pos += 46 + name_len + extra_len + comment_len;
  }
  return entries;
}

}  // namespace edgeflow::zip
