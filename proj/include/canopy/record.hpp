// Copyright 2026 The Canopy Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace canopy {

// ---------------------------------------------------------------------------
// Checksums.
//
// Records are framed the same way TFRecord files are, so shards written here
// can be consumed by existing training tooling:
//
//   uint64 length            (little-endian)
//   uint32 masked crc32c of the 8 length bytes
//   byte   data[length]
//   uint32 masked crc32c of data
//
// The mask rotates the CRC right by 15 bits and adds 0xa282ead8 mod 2^32.
// ---------------------------------------------------------------------------

/// CRC-32 with the Castagnoli polynomial (reflected form 0x82f63b78).
std::uint32_t crc32c(std::span<const std::uint8_t> data);

std::uint32_t mask_crc(std::uint32_t crc);
std::uint32_t unmask_crc(std::uint32_t masked);

/// crc32c + mask, the checksum actually stored on the wire.
std::uint32_t masked_crc32c(std::span<const std::uint8_t> data);

/// Appends one framed record. Returns the number of bytes written.
/// Throws IoError (with the stream offset) on write failure.
std::size_t write_record(std::ostream& out,
                         std::span<const std::uint8_t> payload);

/// Reads one framed record. Returns std::nullopt on clean end-of-stream at
/// a record boundary. Throws CorruptionError (with the file offset) on a
/// checksum mismatch or a truncated record.
std::optional<std::vector<std::uint8_t>> read_record(std::istream& in);

// ---------------------------------------------------------------------------
// Example payloads.
//
// Canonical little-endian encoding, so equal payloads always produce
// identical bytes:
//
//   byte[4]  "CNPX"                        format tag
//   uint32   1                             version
//   uint32   file_name length, then file_name bytes (UTF-8)
//   uint32   width
//   uint32   height
//   uint64   image length, then encoded image bytes (may be empty)
//   uint32   box count N
//   N times:
//     int64  category_id
//     f64    xmin, ymin, xmax, ymax
//     uint32 label length, then label bytes (UTF-8)
// ---------------------------------------------------------------------------

struct BoxEntry {
  std::int64_t category_id = 0;
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  bool operator==(const BoxEntry&) const = default;
};

struct ExamplePayload {
  std::string file_name;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> image_bytes;
  std::vector<BoxEntry> boxes;
  std::vector<std::string> labels;  // aligned with boxes

  bool operator==(const ExamplePayload&) const = default;
};

/// Throws Error when boxes/labels lengths differ or a box violates the
/// coordinate invariants for the stated width/height.
std::vector<std::uint8_t> encode_example(const ExamplePayload& payload);

/// Throws ParseError naming the offending field.
ExamplePayload decode_example(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------------------
// Shards and splits.
// ---------------------------------------------------------------------------

struct RecordShard {
  std::filesystem::path path;
  std::int64_t record_count = 0;
};

/// Shard file name "<base>-SSSSS-of-NNNNN" (both zero-padded to 5 digits).
std::string shard_file_name(const std::string& base, int shard_index,
                            int num_shards);

/// Distributes example i to shard (i mod num_shards). Shards are written to
/// temp files and renamed into place once complete.
std::vector<RecordShard> write_shards(
    const std::vector<std::vector<std::uint8_t>>& encoded_examples,
    const std::filesystem::path& dir, const std::string& base, int num_shards);

/// All records of one shard file, in order.
std::vector<std::vector<std::uint8_t>> read_record_file(
    const std::filesystem::path& path);

/// Reads every shard and restores the original write order by interleaving
/// (record j of shard s was example j * num_shards + s).
std::vector<std::vector<std::uint8_t>> read_shards_interleaved(
    const std::vector<RecordShard>& shards);

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> eval;

  bool operator==(const SplitPlan&) const = default;
};

/// Deterministic seeded shuffle; the first round(N * eval_fraction) ids
/// (rounding half away from zero) form the eval set. Throws Error on an
/// empty id list or eval_fraction outside (0, 1).
SplitPlan split_train_eval(const std::vector<std::int64_t>& image_ids,
                           double eval_fraction, std::uint64_t seed);

std::string write_split_plan(const SplitPlan& plan);
SplitPlan read_split_plan(const std::string& json_text);

}  // namespace canopy
