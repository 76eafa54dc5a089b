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
#include <set>
#include <string>
#include <vector>

#include "canopy/geometry.hpp"

namespace canopy {

/// Row-major per-pixel membership bitmap.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height);  // all clear

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(int x, int y) const {
    return bits_[std::size_t(y) * std::size_t(width_) + std::size_t(x)] != 0;
  }
  void set(int x, int y, bool value = true) {
    bits_[std::size_t(y) * std::size_t(width_) + std::size_t(x)] =
        value ? 1 : 0;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const BinaryMask&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// One segmented object: full-image mask plus its ROI, category and score.
/// Construction clips the mask so no set pixel lies outside the ROI.
class InstanceMask {
 public:
  InstanceMask(int category_id, const Roi& roi, BinaryMask mask,
               double score);

  int category_id() const { return category_id_; }
  const Roi& roi() const { return roi_; }
  const BinaryMask& mask() const { return mask_; }
  double score() const { return score_; }

 private:
  int category_id_;
  Roi roi_;
  BinaryMask mask_;
  double score_;
};

/// Rasterizes a polygon with the even-odd rule: pixel (x, y) is set iff its
/// center (x+0.5, y+0.5) lies inside. Self-intersecting rings are filled by
/// the same rule, not rejected.
BinaryMask polygon_to_mask(const Polygon& p, int width, int height);

/// True when any two non-adjacent edges properly cross.
bool polygon_self_intersects(const Polygon& p);

/// Number of set pixels.
std::int64_t mask_area(const BinaryMask& m);

/// Tight [y1, x1, y2, x2] bounds of the set pixels, exclusive ends.
/// Throws Error on an empty mask.
Roi mask_to_roi(const BinaryMask& m);

/// Per-pixel logical OR. Throws Error on dimension mismatch.
BinaryMask union_masks(const std::vector<BinaryMask>& masks);

struct LeafAssignment {
  std::size_t leaf_index = 0;
  std::vector<std::size_t> disease_indices;
};

struct Assignment {
  std::vector<LeafAssignment> leaves;
  std::vector<std::size_t> unowned_diseases;
};

/// Ownership by strict ROI containment: a disease belongs to a leaf iff the
/// leaf ROI strictly contains the disease ROI on all four sides. When
/// several leaves qualify, the one with the smallest ROI area wins (ties by
/// lowest instance index). Diseases contained by no leaf are reported as
/// unowned, never dropped.
Assignment assign(const std::vector<InstanceMask>& instances,
                  int leaf_category, const std::set<int>& disease_categories);

struct LeafDamageReport {
  std::size_t leaf_index = 0;
  std::vector<std::size_t> disease_indices;
  std::int64_t leaf_area_px = 0;
  std::int64_t disease_area_px = 0;
  double damage_pct = 0.0;
};

/// Union of the diseases' masks restricted to the leaf mask, counted and
/// divided by the leaf area (x100). Throws Error when the leaf mask is
/// empty. The restriction caps damage_pct at 100.
LeafDamageReport damage_percentage(const InstanceMask& leaf,
                                   const std::vector<InstanceMask>& diseases);

// Run-length encoding used by the instance-mask JSON interchange format:
// column-major pixel order, first run counts unset pixels.
std::vector<std::int64_t> rle_encode(const BinaryMask& m);
BinaryMask rle_decode(int width, int height,
                      const std::vector<std::int64_t>& counts);

/// Binary PGM (P5), set pixels as 255.
std::string mask_to_pgm(const BinaryMask& m);
BinaryMask parse_pgm(const std::string& bytes);

/// Minimal 8-bit grayscale PNG (stored-deflate zlib stream).
std::string mask_to_png(const BinaryMask& m);

}  // namespace canopy
