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

#include "canopy/record.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "canopy/error.hpp"

namespace canopy {

using nlohmann::json;

namespace {

constexpr std::uint32_t kCrc32cPolynomial = 0x82f63b78u;  // reflected
constexpr std::uint32_t kMaskDelta = 0xa282ead8u;

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int bit = 0; bit < 8; ++bit) {
      c = (c & 1u) ? (c >> 1) ^ kCrc32cPolynomial : (c >> 1);
    }
    table[i] = c;
  }
  return table;
}

const std::array<std::uint32_t, 256>& crc_table() {
  static const auto table = make_crc_table();
  return table;
}

}  // namespace

std::uint32_t crc32c(std::span<const std::uint8_t> data) {
  const auto& table = crc_table();
  std::uint32_t crc = 0xffffffffu;
  for (const std::uint8_t byte : data) {
    crc = table[(crc ^ byte) & 0xffu] ^ (crc >> 8);
  }
  return crc ^ 0xffffffffu;
}

std::uint32_t mask_crc(std::uint32_t crc) {
  return std::rotr(crc, 15) + kMaskDelta;
}

std::uint32_t unmask_crc(std::uint32_t masked) {
  return std::rotl(masked - kMaskDelta, 15);
}

std::uint32_t masked_crc32c(std::span<const std::uint8_t> data) {
  return mask_crc(crc32c(data));
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xffu);
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back((v >> (8 * i)) & 0xffu);
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t load_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
  return v;
}

std::uint64_t load_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

/// Bounds-checked cursor over an encoded example.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* field) {
    if (n > data_.size() - pos_) {
      throw ParseError(std::string("example: truncated field '") + field +
                       "'");
    }
    auto view = data_.subspan(pos_, n);
    pos_ += n;
    return view;
  }

  std::uint32_t u32(const char* field) { return load_u32(take(4, field).data()); }
  std::uint64_t u64(const char* field) { return load_u64(take(8, field).data()); }
  std::int64_t i64(const char* field) {
    return static_cast<std::int64_t>(u64(field));
  }
  double f64(const char* field) {
    return std::bit_cast<double>(u64(field));
  }
  std::string text(std::size_t n, const char* field) {
    auto view = take(n, field);
    return std::string(view.begin(), view.end());
  }

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

constexpr char kExampleTag[4] = {'C', 'N', 'P', 'X'};
constexpr std::uint32_t kExampleVersion = 1;

void check_payload(const ExamplePayload& p, const char* who) {
  if (p.boxes.size() != p.labels.size()) {
    throw Error(std::string(who) + ": boxes/labels length mismatch (" +
                std::to_string(p.boxes.size()) + " vs " +
                std::to_string(p.labels.size()) + ")");
  }
  for (std::size_t i = 0; i < p.boxes.size(); ++i) {
    const auto& b = p.boxes[i];
    const bool ok = std::isfinite(b.xmin) && std::isfinite(b.ymin) &&
                    std::isfinite(b.xmax) && std::isfinite(b.ymax) &&
                    b.xmin >= 0.0 && b.ymin >= 0.0 && b.xmin < b.xmax &&
                    b.ymin < b.ymax && b.xmax <= double(p.width) &&
                    b.ymax <= double(p.height);
    if (!ok) {
      throw Error(std::string(who) + ": box " + std::to_string(i) +
                  " violates coordinate invariants");
    }
  }
}

}  // namespace

std::size_t write_record(std::ostream& out,
                         std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> header;
  header.reserve(12);
  put_u64(header, payload.size());
  const std::uint32_t length_crc =
      masked_crc32c(std::span(header.data(), 8));
  put_u32(header, length_crc);

  std::vector<std::uint8_t> footer;
  put_u32(footer, masked_crc32c(payload));

  const auto start = out.tellp();
  out.write(reinterpret_cast<const char*>(header.data()),
            static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  out.write(reinterpret_cast<const char*>(footer.data()),
            static_cast<std::streamsize>(footer.size()));
  if (!out) {
    throw IoError("record write failed at byte offset " +
                  std::to_string(static_cast<long long>(start)));
  }
  return header.size() + payload.size() + footer.size();
}

std::optional<std::vector<std::uint8_t>> read_record(std::istream& in) {
  const auto offset = in.tellg();
  const auto at = [&] {
    return " at offset " + std::to_string(static_cast<long long>(offset));
  };

  std::uint8_t length_buf[8];
  in.read(reinterpret_cast<char*>(length_buf), 8);
  if (in.gcount() == 0 && in.eof()) return std::nullopt;
  if (in.gcount() != 8) {
    throw CorruptionError("truncated record length" + at());
  }

  std::uint8_t crc_buf[4];
  in.read(reinterpret_cast<char*>(crc_buf), 4);
  if (in.gcount() != 4) throw CorruptionError("truncated length crc" + at());
  if (load_u32(crc_buf) != masked_crc32c(std::span(length_buf, 8))) {
    throw CorruptionError("length crc mismatch" + at());
  }

  const std::uint64_t length = load_u64(length_buf);
  std::vector<std::uint8_t> payload(length);
  if (length > 0) {
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(length));
    if (static_cast<std::uint64_t>(in.gcount()) != length) {
      throw CorruptionError("truncated payload" + at());
    }
  }

  in.read(reinterpret_cast<char*>(crc_buf), 4);
  if (in.gcount() != 4) throw CorruptionError("truncated payload crc" + at());
  if (load_u32(crc_buf) != masked_crc32c(payload)) {
    throw CorruptionError("payload crc mismatch" + at());
  }
  return payload;
}

std::vector<std::uint8_t> encode_example(const ExamplePayload& payload) {
  check_payload(payload, "encode");
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kExampleTag, kExampleTag + 4);
  put_u32(out, kExampleVersion);
  put_u32(out, static_cast<std::uint32_t>(payload.file_name.size()));
  out.insert(out.end(), payload.file_name.begin(), payload.file_name.end());
  put_u32(out, payload.width);
  put_u32(out, payload.height);
  put_u64(out, payload.image_bytes.size());
  out.insert(out.end(), payload.image_bytes.begin(), payload.image_bytes.end());
  put_u32(out, static_cast<std::uint32_t>(payload.boxes.size()));
  for (std::size_t i = 0; i < payload.boxes.size(); ++i) {
    const auto& b = payload.boxes[i];
    put_u64(out, static_cast<std::uint64_t>(b.category_id));
    put_f64(out, b.xmin);
    put_f64(out, b.ymin);
    put_f64(out, b.xmax);
    put_f64(out, b.ymax);
    const auto& label = payload.labels[i];
    put_u32(out, static_cast<std::uint32_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
  }
  return out;
}

ExamplePayload decode_example(std::span<const std::uint8_t> bytes) {
  ByteReader reader(bytes);
  const auto tag = reader.take(4, "tag");
  if (std::memcmp(tag.data(), kExampleTag, 4) != 0) {
    throw ParseError("example: bad format tag");
  }
  const std::uint32_t version = reader.u32("version");
  if (version != kExampleVersion) {
    throw ParseError("example: unsupported version " +
                     std::to_string(version));
  }
  ExamplePayload p;
  p.file_name = reader.text(reader.u32("file_name length"), "file_name");
  p.width = reader.u32("width");
  p.height = reader.u32("height");
  const std::uint64_t image_len = reader.u64("image length");
  const auto image = reader.take(image_len, "image bytes");
  p.image_bytes.assign(image.begin(), image.end());
  const std::uint32_t box_count = reader.u32("box count");
  for (std::uint32_t i = 0; i < box_count; ++i) {
    BoxEntry b;
    b.category_id = reader.i64("category_id");
    b.xmin = reader.f64("xmin");
    b.ymin = reader.f64("ymin");
    b.xmax = reader.f64("xmax");
    b.ymax = reader.f64("ymax");
    p.boxes.push_back(b);
    p.labels.push_back(reader.text(reader.u32("label length"), "label"));
  }
  if (!reader.exhausted()) throw ParseError("example: trailing bytes");
  try {
    check_payload(p, "decode");
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  return p;
}

std::string shard_file_name(const std::string& base, int shard_index,
                            int num_shards) {
  char suffix[32];
  std::snprintf(suffix, sizeof(suffix), "-%05d-of-%05d", shard_index,
                num_shards);
  return base + suffix;
}

std::vector<RecordShard> write_shards(
    const std::vector<std::vector<std::uint8_t>>& encoded_examples,
    const std::filesystem::path& dir, const std::string& base,
    int num_shards) {
  if (num_shards < 1) throw Error("num_shards must be >= 1");
  namespace fs = std::filesystem;

  struct OpenShard {
    fs::path final_path;
    fs::path tmp_path;
    std::ofstream stream;
    std::int64_t count = 0;
  };
  std::vector<OpenShard> open(num_shards);
  for (int s = 0; s < num_shards; ++s) {
    open[s].final_path = dir / shard_file_name(base, s, num_shards);
    open[s].tmp_path = open[s].final_path;
    open[s].tmp_path += ".tmp";
    open[s].stream.open(open[s].tmp_path, std::ios::binary | std::ios::trunc);
    if (!open[s].stream) {
      throw IoError("cannot create " + open[s].tmp_path.string());
    }
  }
  for (std::size_t i = 0; i < encoded_examples.size(); ++i) {
    auto& shard = open[i % num_shards];
    write_record(shard.stream, encoded_examples[i]);
    ++shard.count;
  }
  std::vector<RecordShard> out;
  for (auto& shard : open) {
    shard.stream.close();
    if (shard.stream.fail()) {
      throw IoError("close failed for " + shard.tmp_path.string());
    }
    std::error_code ec;
    fs::rename(shard.tmp_path, shard.final_path, ec);
    if (ec) {
      throw IoError("rename to " + shard.final_path.string() + ": " +
                    ec.message());
    }
    out.push_back(RecordShard{shard.final_path, shard.count});
  }
  return out;
}

std::vector<std::vector<std::uint8_t>> read_record_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::uint8_t>> records;
  while (auto record = read_record(in)) {
    records.push_back(std::move(*record));
  }
  return records;
}

std::vector<std::vector<std::uint8_t>> read_shards_interleaved(
    const std::vector<RecordShard>& shards) {
  std::vector<std::vector<std::vector<std::uint8_t>>> per_shard;
  std::size_t total = 0;
  for (const auto& shard : shards) {
    per_shard.push_back(read_record_file(shard.path));
    total += per_shard.back().size();
  }
  std::vector<std::vector<std::uint8_t>> out(total);
  for (std::size_t s = 0; s < per_shard.size(); ++s) {
    for (std::size_t j = 0; j < per_shard[s].size(); ++j) {
      const std::size_t original = j * per_shard.size() + s;
      if (original >= total) {
        throw CorruptionError("shard record counts are inconsistent");
      }
      out[original] = std::move(per_shard[s][j]);
    }
  }
  return out;
}

namespace {

/// Unbiased draw from [0, bound) using rejection sampling, so shuffles are
/// reproducible across platforms (std::uniform_int_distribution is not).
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace

SplitPlan split_train_eval(const std::vector<std::int64_t>& image_ids,
                           double eval_fraction, std::uint64_t seed) {
  if (image_ids.empty()) throw Error("split: empty id list");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw Error("split: eval_fraction must be in (0, 1)");
  }
  std::vector<std::int64_t> shuffled = image_ids;
  std::mt19937_64 rng(seed);
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
    const std::size_t j = bounded_rand(rng, i + 1);
    std::swap(shuffled[i], shuffled[j]);
  }
  // Half away from zero, so e.g. 1500 * 0.1 -> exactly 150.
  const auto eval_count = static_cast<std::size_t>(
      std::llround(double(shuffled.size()) * eval_fraction));
  SplitPlan plan;
  plan.seed = seed;
  plan.eval.assign(shuffled.begin(), shuffled.begin() + eval_count);
  plan.train.assign(shuffled.begin() + eval_count, shuffled.end());
  return plan;
}

std::string write_split_plan(const SplitPlan& plan) {
  json root;
  root["seed"] = plan.seed;
  root["train"] = plan.train;
  root["eval"] = plan.eval;
  return root.dump(2) + "\n";
}

SplitPlan read_split_plan(const std::string& json_text) {
  try {
    const json root = json::parse(json_text);
    SplitPlan plan;
    plan.seed = root.at("seed").get<std::uint64_t>();
    plan.train = root.at("train").get<std::vector<std::int64_t>>();
    plan.eval = root.at("eval").get<std::vector<std::int64_t>>();
    return plan;
  } catch (const json::exception& e) {
    throw ParseError(std::string("split plan: ") + e.what());
  }
}

}  // namespace canopy
