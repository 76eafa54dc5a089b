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

#include "canopy/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace canopy {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

BBox::BBox(double xmin, double ymin, double xmax, double ymax)
    : xmin_(xmin), ymin_(ymin), xmax_(xmax), ymax_(ymax) {
  require(std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) &&
              std::isfinite(ymax),
          "BBox: coordinates must be finite");
  require(xmin >= 0.0 && ymin >= 0.0, "BBox: coordinates must be >= 0");
  require(xmin < xmax && ymin < ymax,
          "BBox: requires xmin < xmax and ymin < ymax");
}

Roi::Roi(double y1, double x1, double y2, double x2)
    : y1_(y1), x1_(x1), y2_(y2), x2_(x2) {
  require(std::isfinite(y1) && std::isfinite(x1) && std::isfinite(y2) &&
              std::isfinite(x2),
          "Roi: coordinates must be finite");
  require(y1 < y2 && x1 < x2, "Roi: requires y1 < y2 and x1 < x2");
}

Polygon::Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
  require(vertices_.size() >= 3, "Polygon: needs at least 3 vertices");
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Point& a = vertices_[i];
    const Point& b = vertices_[(i + 1) % vertices_.size()];
    require(!(a == b), "Polygon: consecutive vertices coincide");
  }
}

double area(const BBox& b) { return b.area(); }

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.xmax(), b.xmax()) - std::max(a.xmin(), b.xmin());
  const double ih = std::min(a.ymax(), b.ymax()) - std::max(a.ymin(), b.ymin());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

CornerQuad roi_to_coordinates(const Roi& r) {
  return CornerQuad{{r.x1(), r.y1()},
                    {r.x2(), r.y1()},
                    {r.x2(), r.y2()},
                    {r.x1(), r.y2()}};
}

bool contains_strict(const Roi& outer, const Roi& inner) {
  return outer.x1() < inner.x1() && outer.y1() < inner.y1() &&
         outer.x2() > inner.x2() && outer.y2() > inner.y2();
}

double normalize_angle(double degrees) {
  double a = std::fmod(degrees, 360.0);
  if (a < -180.0) a += 360.0;
  if (a >= 180.0) a -= 360.0;
  // fmod can return -0.0; keep the canonical zero.
  if (a == 0.0) a = 0.0;
  return a;
}

namespace {

struct Rotation {
  double cos_a;
  double sin_a;
  double cx;
  double cy;
  double shift_x;
  double shift_y;

  Point apply(const Point& p) const {
    const double dx = p.x - cx;
    const double dy = p.y - cy;
    // Image coordinates have y growing downward; this matches rotating the
    // raster content counterclockwise by the given angle.
    return Point{cx + dx * cos_a + dy * sin_a + shift_x,
                 cy - dx * sin_a + dy * cos_a + shift_y};
  }
};

Rotation make_rotation(double degrees, double image_w, double image_h) {
  const double rad = degrees * std::numbers::pi / 180.0;
  Rotation rot{std::cos(rad), std::sin(rad), image_w / 2.0, image_h / 2.0,
               0.0, 0.0};
  const Point corners[4] = {{0.0, 0.0},
                            {image_w, 0.0},
                            {image_w, image_h},
                            {0.0, image_h}};
  double min_x = 0.0, min_y = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point q = rot.apply(corners[i]);
    if (i == 0 || q.x < min_x) min_x = q.x;
    if (i == 0 || q.y < min_y) min_y = q.y;
  }
  rot.shift_x = -min_x;
  rot.shift_y = -min_y;
  return rot;
}

}  // namespace

Extent rotated_canvas(double degrees, double image_w, double image_h) {
  const double a = normalize_angle(degrees);
  if (a == 0.0) return Extent{image_w, image_h};
  const Rotation rot = make_rotation(a, image_w, image_h);
  const Point corners[4] = {{0.0, 0.0},
                            {image_w, 0.0},
                            {image_w, image_h},
                            {0.0, image_h}};
  double max_x = 0.0, max_y = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point q = rot.apply(corners[i]);
    max_x = std::max(max_x, q.x);
    max_y = std::max(max_y, q.y);
  }
  return Extent{max_x, max_y};
}

Point rotate_point(const Point& p, double degrees, double image_w,
                   double image_h) {
  const double a = normalize_angle(degrees);
  if (a == 0.0) return p;
  return make_rotation(a, image_w, image_h).apply(p);
}

std::optional<BBox> rotate_box(const BBox& b, double degrees, double image_w,
                               double image_h) {
  const double a = normalize_angle(degrees);
  if (a == 0.0) return b;

  const Rotation rot = make_rotation(a, image_w, image_h);
  const Point corners[4] = {{b.xmin(), b.ymin()},
                            {b.xmax(), b.ymin()},
                            {b.xmax(), b.ymax()},
                            {b.xmin(), b.ymax()}};
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Point q = rot.apply(corners[i]);
    if (i == 0 || q.x < min_x) min_x = q.x;
    if (i == 0 || q.y < min_y) min_y = q.y;
    if (i == 0 || q.x > max_x) max_x = q.x;
    if (i == 0 || q.y > max_y) max_y = q.y;
  }

  const Extent canvas = rotated_canvas(a, image_w, image_h);
  min_x = std::clamp(min_x, 0.0, canvas.width);
  max_x = std::clamp(max_x, 0.0, canvas.width);
  min_y = std::clamp(min_y, 0.0, canvas.height);
  max_y = std::clamp(max_y, 0.0, canvas.height);
  if (max_x - min_x <= 0.0 || max_y - min_y <= 0.0) return std::nullopt;
  return BBox(min_x, min_y, max_x, max_y);
}

std::optional<BBox> crop_box(const BBox& b, const BBox& window,
                             double min_kept_fraction) {
  const double ix1 = std::max(b.xmin(), window.xmin());
  const double iy1 = std::max(b.ymin(), window.ymin());
  const double ix2 = std::min(b.xmax(), window.xmax());
  const double iy2 = std::min(b.ymax(), window.ymax());
  if (ix2 - ix1 <= 0.0 || iy2 - iy1 <= 0.0) return std::nullopt;
  const double kept = (ix2 - ix1) * (iy2 - iy1);
  if (kept < min_kept_fraction * b.area()) return std::nullopt;
  return BBox(ix1 - window.xmin(), iy1 - window.ymin(), ix2 - window.xmin(),
              iy2 - window.ymin());
}

}  // namespace canopy
