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

#include <optional>
#include <vector>

namespace canopy {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

/// Axis-aligned rectangle in continuous pixel coordinates, corner form.
/// Coordinates are treated as exclusive at xmax/ymax, so the area of an
/// integer-valued box equals the number of unit cells it covers.
class BBox {
 public:
  /// Throws std::invalid_argument unless 0 <= xmin < xmax, 0 <= ymin < ymax
  /// and all coordinates are finite. Zero-area boxes are rejected.
  BBox(double xmin, double ymin, double xmax, double ymax);

  double xmin() const { return xmin_; }
  double ymin() const { return ymin_; }
  double xmax() const { return xmax_; }
  double ymax() const { return ymax_; }

  double width() const { return xmax_ - xmin_; }
  double height() const { return ymax_ - ymin_; }
  double area() const { return width() * height(); }

  bool operator==(const BBox&) const = default;

 private:
  double xmin_, ymin_, xmax_, ymax_;
};

/// Region of interest in [y1, x1, y2, x2] order, y2/x2 exclusive.
class Roi {
 public:
  /// Throws std::invalid_argument unless y1 < y2 and x1 < x2.
  Roi(double y1, double x1, double y2, double x2);

  double y1() const { return y1_; }
  double x1() const { return x1_; }
  double y2() const { return y2_; }
  double x2() const { return x2_; }

  double area() const { return (x2_ - x1_) * (y2_ - y1_); }

  /// Same rectangle in corner form.
  BBox to_box() const { return BBox(x1_, y1_, x2_, y2_); }

  bool operator==(const Roi&) const = default;

 private:
  double y1_, x1_, y2_, x2_;
};

/// The four corners of an axis-aligned rectangle, clockwise from top-left.
struct CornerQuad {
  Point top_left;
  Point top_right;
  Point bottom_right;
  Point bottom_left;

  bool operator==(const CornerQuad&) const = default;
};

/// Closed polygon given by its vertex ring. The last vertex connects back
/// to the first implicitly.
class Polygon {
 public:
  /// Throws std::invalid_argument for fewer than 3 vertices or when two
  /// consecutive vertices (including last->first) coincide.
  explicit Polygon(std::vector<Point> vertices);

  const std::vector<Point>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }

  bool operator==(const Polygon&) const = default;

 private:
  std::vector<Point> vertices_;
};

double area(const BBox& b);

/// Intersection over union. 0 for disjoint or edge-touching rectangles.
double iou(const BBox& a, const BBox& b);

/// Expands a [y1, x1, y2, x2] region into its four corner points:
/// (x1,y1), (x2,y1), (x2,y2), (x1,y2).
CornerQuad roi_to_coordinates(const Roi& r);

/// True iff inner lies strictly inside outer on all four sides.
/// Shared edges fail; contains_strict(r, r) is always false.
bool contains_strict(const Roi& outer, const Roi& inner);

/// Reduces an angle in degrees to the canonical range [-180, 180).
double normalize_angle(double degrees);

/// Continuous extent of the canvas that exactly holds an image of the given
/// size rotated by `degrees` about its center.
struct Extent {
  double width = 0.0;
  double height = 0.0;
};
Extent rotated_canvas(double degrees, double image_w, double image_h);

/// Rotates a point about the image center by `degrees` and translates it
/// into the expanded-canvas frame returned by rotated_canvas().
Point rotate_point(const Point& p, double degrees, double image_w,
                   double image_h);

/// Rotates the four corners of `b` about the image center, takes the
/// axis-aligned hull of the result and clips it to the expanded canvas.
/// Returns nothing when the clipped hull has zero area.
std::optional<BBox> rotate_box(const BBox& b, double degrees, double image_w,
                               double image_h);

/// Intersects `b` with `window` and translates the result into
/// window-local coordinates. Returns nothing when the intersection is
/// empty or keeps less than `min_kept_fraction` of the original area.
std::optional<BBox> crop_box(const BBox& b, const BBox& window,
                             double min_kept_fraction);

}  // namespace canopy
