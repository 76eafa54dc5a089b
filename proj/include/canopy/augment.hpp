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
#include <string>
#include <vector>

#include "canopy/annotation.hpp"
#include "canopy/geometry.hpp"

namespace canopy {

struct AugmentConfig {
  /// Arbitrary angles in [-180, 180) by default; right_angles_only restricts
  /// the draw to {0, 90, -90, -180}.
  bool right_angles_only = false;
  /// Crop window side lengths are drawn uniformly from
  /// [crop_min_side_fraction, 1] of each image dimension.
  double crop_min_side_fraction = 0.5;
  /// A cropped box survives when it keeps at least this fraction of its area.
  double min_kept_fraction = 0.3;
  /// Crop windows are resampled this many times looking for one that keeps
  /// at least one box, then fall back to the full image window.
  int max_crop_retries = 10;
};

/// One rotation variant and one crop variant for a single source image.
struct AugmentItem {
  std::int64_t image_id = 0;
  double angle = 0.0;
  BBox window;
};

struct AugmentPlan {
  std::uint64_t seed = 0;
  std::vector<AugmentItem> items;
  /// Image ids whose crop fell back to the full-image window.
  std::vector<std::int64_t> degenerate_crops;
};

/// Samples one angle and one crop window per image, deterministically from
/// the seed. Images are visited in index order.
AugmentPlan plan(const DatasetIndex& index, std::uint64_t seed,
                 const AugmentConfig& config = {});

/// Annotation transform outcome; drop counters cover boxes clipped away by
/// the transform and polygons that left the crop window.
struct TransformResult {
  ImageAnnotation annotation;
  int dropped_boxes = 0;
  int dropped_polygons = 0;
};

/// Rotates an annotation onto the expanded canvas. Boxes are re-boxed as
/// axis-aligned hulls via rotate_box; polygons are rotated vertex-wise.
TransformResult apply_rotation(const ImageAnnotation& ann, double angle);

/// Crops an annotation to `window` (translated to window-local
/// coordinates). Boxes go through crop_box; polygons are kept only when
/// they lie entirely inside the window.
TransformResult apply_crop(const ImageAnnotation& ann, const BBox& window,
                           double min_kept_fraction);

/// Plan JSON: {seed, items:[{image_id, angle, window:[xmin,ymin,xmax,ymax]}]}.
std::string write_plan(const AugmentPlan& plan);
AugmentPlan read_plan(const std::string& json_text);

}  // namespace canopy
