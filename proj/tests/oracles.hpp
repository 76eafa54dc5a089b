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

// Test-only reference implementations, deliberately written on different
// algorithmic paths than the library so the two sides can check each other.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "canopy/geometry.hpp"
#include "canopy/metrics.hpp"

namespace canopy::oracle {

/// Integer-coordinate box for grid counting.
struct GridBox {
  int xmin, ymin, xmax, ymax;
};

/// IOU by counting unit grid cells covered by each box.
double grid_iou(const GridBox& a, const GridBox& b);

/// CRC-32C computed MSB-first with the forward polynomial 0x1edc6f41 over
/// bit-reversed input bytes, result bit-reversed back. Exercises a
/// different register orientation than the library's reflected-table path.
std::uint32_t crc32c_bitwise(std::span<const std::uint8_t> data);

/// Even-odd point-in-polygon test for one pixel center, counting edge
/// crossings strictly to the right of the point.
bool point_in_polygon_center(double cx, double cy,
                             const std::vector<Point>& vertices);

/// Full PR staircase for one category: recall/precision after each ranked
/// detection. Matching is reimplemented with selection-by-maximum rather
/// than a sort.
struct StairPoint {
  double recall;
  double precision;
};
std::vector<StairPoint> pr_staircase(std::span<const GroundTruth> gts,
                                     std::span<const Detection> dets,
                                     double iou_threshold);

/// 101-point AP from the staircase, each recall point evaluated by a direct
/// maximum scan over all staircase entries.
double ap_101(std::span<const GroundTruth> gts,
              std::span<const Detection> dets, double iou_threshold);

/// Exact area under the interpolated (running-max) staircase.
double ap_exact_integral(std::span<const GroundTruth> gts,
                         std::span<const Detection> dets,
                         double iou_threshold);

/// Final recall after all detections are processed.
double final_recall(std::span<const GroundTruth> gts,
                    std::span<const Detection> dets, double iou_threshold);

}  // namespace canopy::oracle
