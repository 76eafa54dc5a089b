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

#include "canopy/damage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "canopy/error.hpp"

namespace canopy {

BinaryMask::BinaryMask(int width, int height)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error("mask dimensions must be positive");
  }
  bits_.assign(std::size_t(width) * std::size_t(height), 0);
}

InstanceMask::InstanceMask(int category_id, const Roi& roi, BinaryMask mask,
                           double score)
    : category_id_(category_id),
      roi_(roi),
      mask_(std::move(mask)),
      score_(score) {
  for (int y = 0; y < mask_.height(); ++y) {
    const double cy = y + 0.5;
    const bool row_inside = cy >= roi_.y1() && cy < roi_.y2();
    for (int x = 0; x < mask_.width(); ++x) {
      if (!mask_.at(x, y)) continue;
      const double cx = x + 0.5;
      if (!row_inside || cx < roi_.x1() || cx >= roi_.x2()) {
        mask_.set(x, y, false);
      }
    }
  }
}

BinaryMask polygon_to_mask(const Polygon& p, int width, int height) {
  BinaryMask mask(width, height);
  const auto& v = p.vertices();
  const std::size_t n = v.size();
  std::vector<double> crossings;
  for (int y = 0; y < height; ++y) {
    const double cy = y + 0.5;
    crossings.clear();
    for (std::size_t e = 0; e < n; ++e) {
      const Point& a = v[e];
      const Point& b = v[(e + 1) % n];
      // Half-open vertical rule: the edge crosses the scanline iff exactly
      // one endpoint lies strictly below it.
      if ((a.y > cy) != (b.y > cy)) {
        crossings.push_back(a.x + (cy - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    // A center is inside iff an odd number of crossings lie strictly to
    // its right.
    std::size_t k = 0;
    for (int x = 0; x < width; ++x) {
      const double cx = x + 0.5;
      while (k < crossings.size() && crossings[k] <= cx) ++k;
      if ((crossings.size() - k) & 1u) mask.set(x, y);
    }
  }
  return mask;
}

namespace {

int orientation(const Point& a, const Point& b, const Point& c) {
  const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  if (cross > 0.0) return 1;
  if (cross < 0.0) return -1;
  return 0;
}

bool segments_properly_cross(const Point& a, const Point& b, const Point& c,
                             const Point& d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  return o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0 && o1 != o2 && o3 != o4;
}

}  // namespace

bool polygon_self_intersects(const Polygon& p) {
  const auto& v = p.vertices();
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip adjacent edges (they share a vertex).
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_properly_cross(v[i], v[(i + 1) % n], v[j],
                                  v[(j + 1) % n])) {
        return true;
      }
    }
  }
  return false;
}

std::int64_t mask_area(const BinaryMask& m) {
  std::int64_t count = 0;
  for (const std::uint8_t bit : m.bits()) count += bit;
  return count;
}

Roi mask_to_roi(const BinaryMask& m) {
  int min_x = std::numeric_limits<int>::max();
  int min_y = std::numeric_limits<int>::max();
  int max_x = -1;
  int max_y = -1;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      min_x = std::min(min_x, x);
      min_y = std::min(min_y, y);
      max_x = std::max(max_x, x);
      max_y = std::max(max_y, y);
    }
  }
  if (max_x < 0) throw Error("mask_to_roi: empty mask");
  return Roi(min_y, min_x, max_y + 1, max_x + 1);
}

BinaryMask union_masks(const std::vector<BinaryMask>& masks) {
  if (masks.empty()) throw Error("union_masks: no masks");
  BinaryMask out = masks.front();
  for (std::size_t i = 1; i < masks.size(); ++i) {
    const BinaryMask& m = masks[i];
    if (m.width() != out.width() || m.height() != out.height()) {
      throw Error("union_masks: dimension mismatch");
    }
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        if (m.at(x, y)) out.set(x, y);
      }
    }
  }
  return out;
}

Assignment assign(const std::vector<InstanceMask>& instances,
                  int leaf_category, const std::set<int>& disease_categories) {
  Assignment result;
  std::vector<std::size_t> leaf_indices;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].category_id() == leaf_category) {
      leaf_indices.push_back(i);
      result.leaves.push_back(LeafAssignment{i, {}});
    }
  }

  for (std::size_t d = 0; d < instances.size(); ++d) {
    if (!disease_categories.count(instances[d].category_id())) continue;
    std::size_t owner = instances.size();
    double owner_area = 0.0;
    for (std::size_t li = 0; li < leaf_indices.size(); ++li) {
      const std::size_t l = leaf_indices[li];
      if (l == d) continue;
      if (!contains_strict(instances[l].roi(), instances[d].roi())) continue;
      const double area = instances[l].roi().area();
      if (owner == instances.size() || area < owner_area) {
        owner = li;
        owner_area = area;
      }
    }
    if (owner == instances.size()) {
      result.unowned_diseases.push_back(d);
    } else {
      result.leaves[owner].disease_indices.push_back(d);
    }
  }
  return result;
}

LeafDamageReport damage_percentage(
    const InstanceMask& leaf, const std::vector<InstanceMask>& diseases) {
  LeafDamageReport report;
  report.leaf_area_px = mask_area(leaf.mask());
  if (report.leaf_area_px == 0) {
    throw Error("damage_percentage: leaf mask is empty");
  }

  if (!diseases.empty()) {
    std::vector<BinaryMask> disease_masks;
    disease_masks.reserve(diseases.size());
    for (const auto& d : diseases) disease_masks.push_back(d.mask());
    BinaryMask merged = union_masks(disease_masks);
    if (merged.width() != leaf.mask().width() ||
        merged.height() != leaf.mask().height()) {
      throw Error("damage_percentage: mask dimension mismatch");
    }
    // Only disease pixels on the leaf itself count, so the ratio cannot
    // exceed 100%.
    std::int64_t overlap = 0;
    for (int y = 0; y < merged.height(); ++y) {
      for (int x = 0; x < merged.width(); ++x) {
        if (merged.at(x, y) && leaf.mask().at(x, y)) ++overlap;
      }
    }
    report.disease_area_px = overlap;
  }
  report.damage_pct =
      100.0 * double(report.disease_area_px) / double(report.leaf_area_px);
  return report;
}

std::vector<std::int64_t> rle_encode(const BinaryMask& m) {
  std::vector<std::int64_t> counts;
  std::uint8_t current = 0;
  std::int64_t run = 0;
  for (int x = 0; x < m.width(); ++x) {
    for (int y = 0; y < m.height(); ++y) {
      const std::uint8_t value = m.at(x, y) ? 1 : 0;
      if (value == current) {
        ++run;
      } else {
        counts.push_back(run);
        current = value;
        run = 1;
      }
    }
  }
  counts.push_back(run);
  return counts;
}

BinaryMask rle_decode(int width, int height,
                      const std::vector<std::int64_t>& counts) {
  BinaryMask mask(width, height);
  const std::int64_t total = std::int64_t(width) * std::int64_t(height);
  std::int64_t pos = 0;
  bool value = false;
  for (const std::int64_t run : counts) {
    if (run < 0) throw ParseError("rle: negative run length");
    for (std::int64_t i = 0; i < run; ++i) {
      if (pos >= total) throw ParseError("rle: runs exceed mask size");
      if (value) {
        mask.set(static_cast<int>(pos / height), static_cast<int>(pos % height));
      }
      ++pos;
    }
    value = !value;
  }
  if (pos != total) throw ParseError("rle: runs do not cover mask");
  return mask;
}

std::string mask_to_pgm(const BinaryMask& m) {
  std::string out = "P5\n" + std::to_string(m.width()) + " " +
                    std::to_string(m.height()) + "\n255\n";
  out.reserve(out.size() + m.bits().size());
  for (const std::uint8_t bit : m.bits()) {
    out.push_back(bit ? char(0xff) : char(0x00));
  }
  return out;
}

BinaryMask parse_pgm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  int width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (!in || magic != "P5" || width <= 0 || height <= 0 || maxval != 255) {
    throw ParseError("pgm: bad header");
  }
  in.get();  // single whitespace after maxval
  BinaryMask mask(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int c = in.get();
      if (c == std::istringstream::traits_type::eof()) {
        throw ParseError("pgm: truncated pixel data");
      }
      if (c != 0) mask.set(x, y);
    }
  }
  return mask;
}

namespace {

std::uint32_t crc32_png(const std::uint8_t* data, std::size_t n,
                        std::uint32_t crc = 0xffffffffu) {
  for (std::size_t i = 0; i < n; ++i) {
    crc ^= data[i];
    for (int bit = 0; bit < 8; ++bit) {
      crc = (crc & 1u) ? (crc >> 1) ^ 0xedb88320u : (crc >> 1);
    }
  }
  return crc;
}

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(char((v >> 24) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const std::uint32_t crc =
      crc32_png(reinterpret_cast<const std::uint8_t*>(body.data()),
                body.size()) ^
      0xffffffffu;
  put_be32(out, crc);
}

}  // namespace

std::string mask_to_png(const BinaryMask& m) {
  // Raw image data: one filter byte (0 = none) before each row.
  std::string raw;
  raw.reserve(std::size_t(m.height()) * (std::size_t(m.width()) + 1));
  for (int y = 0; y < m.height(); ++y) {
    raw.push_back('\0');
    for (int x = 0; x < m.width(); ++x) {
      raw.push_back(m.at(x, y) ? char(0xff) : char(0x00));
    }
  }

  // zlib stream with stored (uncompressed) deflate blocks.
  std::string idat;
  idat.push_back(char(0x78));
  idat.push_back(char(0x01));
  std::size_t pos = 0;
  do {
    const std::size_t block = std::min<std::size_t>(raw.size() - pos, 65535);
    idat.push_back(pos + block == raw.size() ? char(0x01) : char(0x00));
    idat.push_back(char(block & 0xff));
    idat.push_back(char((block >> 8) & 0xff));
    idat.push_back(char(~block & 0xff));
    idat.push_back(char((~block >> 8) & 0xff));
    idat.append(raw, pos, block);
    pos += block;
  } while (pos < raw.size());
  std::uint32_t s1 = 1, s2 = 0;
  for (const char c : raw) {
    s1 = (s1 + std::uint8_t(c)) % 65521;
    s2 = (s2 + s1) % 65521;
  }
  put_be32(idat, (s2 << 16) | s1);

  std::string ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(m.width()));
  put_be32(ihdr, static_cast<std::uint32_t>(m.height()));
  ihdr.push_back(char(8));   // bit depth
  ihdr.push_back(char(0));   // grayscale
  ihdr.push_back(char(0));   // compression
  ihdr.push_back(char(0));   // filter
  ihdr.push_back(char(0));   // no interlace

  std::string out("\x89PNG\r\n\x1a\n", 8);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", idat);
  put_chunk(out, "IEND", "");
  return out;
}

}  // namespace canopy
