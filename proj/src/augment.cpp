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

#include "canopy/augment.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "canopy/error.hpp"

namespace canopy {

using nlohmann::json;

namespace {

// Hand-rolled draws: the standard distributions are implementation-defined,
// and plans must be byte-identical across platforms for a given seed.
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

double unit_real(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

double sample_angle(std::mt19937_64& rng, const AugmentConfig& config) {
  if (config.right_angles_only) {
    constexpr double kRightAngles[4] = {0.0, 90.0, -90.0, -180.0};
    return kRightAngles[bounded_rand(rng, 4)];
  }
  return -180.0 + 360.0 * unit_real(rng);
}

// Integer-aligned window with each side in
// [crop_min_side_fraction * dim, dim], placed uniformly.
BBox sample_window(std::mt19937_64& rng, int image_w, int image_h,
                   const AugmentConfig& config) {
  const auto side = [&](int dim) {
    const auto min_side = static_cast<std::int64_t>(
        std::ceil(config.crop_min_side_fraction * dim));
    const std::int64_t lo = std::clamp<std::int64_t>(min_side, 1, dim);
    return lo + static_cast<std::int64_t>(bounded_rand(rng, dim - lo + 1));
  };
  const std::int64_t cw = side(image_w);
  const std::int64_t ch = side(image_h);
  const auto x0 = static_cast<double>(bounded_rand(rng, image_w - cw + 1));
  const auto y0 = static_cast<double>(bounded_rand(rng, image_h - ch + 1));
  return BBox(x0, y0, x0 + double(cw), y0 + double(ch));
}

bool any_box_survives(const ImageAnnotation& ann, const BBox& window,
                      double min_kept_fraction) {
  for (const auto& lb : ann.boxes) {
    if (crop_box(lb.box, window, min_kept_fraction)) return true;
  }
  return false;
}

// Round up to whole pixels, tolerating ~1e-14 float noise from the corner
// rotation so a 90-degree turn of a WxH image lands on exactly HxW.
int pixel_extent(double extent) {
  return static_cast<int>(std::llround(std::ceil(extent - 1e-9)));
}

std::optional<BBox> clip_to_canvas(const BBox& b, double w, double h) {
  const double x1 = std::clamp(b.xmin(), 0.0, w);
  const double y1 = std::clamp(b.ymin(), 0.0, h);
  const double x2 = std::clamp(b.xmax(), 0.0, w);
  const double y2 = std::clamp(b.ymax(), 0.0, h);
  if (x2 - x1 <= 0.0 || y2 - y1 <= 0.0) return std::nullopt;
  return BBox(x1, y1, x2, y2);
}

}  // namespace

AugmentPlan plan(const DatasetIndex& index, std::uint64_t seed,
                 const AugmentConfig& config) {
  AugmentPlan out;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  for (const auto& image : index.images) {
    if (image.width <= 0 || image.height <= 0) {
      throw Error("plan: image " + std::to_string(image.image_id) +
                  " has nonpositive dimensions");
    }
    const double angle = sample_angle(rng, config);

    BBox window(0.0, 0.0, image.width, image.height);
    bool degenerate = false;
    if (!image.boxes.empty()) {
      degenerate = true;
      for (int attempt = 0; attempt < config.max_crop_retries; ++attempt) {
        const BBox candidate =
            sample_window(rng, image.width, image.height, config);
        if (any_box_survives(image, candidate, config.min_kept_fraction)) {
          window = candidate;
          degenerate = false;
          break;
        }
      }
    } else {
      window = sample_window(rng, image.width, image.height, config);
    }
    if (degenerate) out.degenerate_crops.push_back(image.image_id);
    out.items.push_back(AugmentItem{image.image_id, angle, window});
  }
  return out;
}

TransformResult apply_rotation(const ImageAnnotation& ann, double angle) {
  const double a = normalize_angle(angle);
  TransformResult result;
  result.annotation.image_id = ann.image_id;
  result.annotation.file_name = ann.file_name;
  if (a == 0.0) {
    result.annotation = ann;
    return result;
  }

  const double w = ann.width;
  const double h = ann.height;
  const Extent canvas = rotated_canvas(a, w, h);
  const int canvas_w = pixel_extent(canvas.width);
  const int canvas_h = pixel_extent(canvas.height);
  result.annotation.width = canvas_w;
  result.annotation.height = canvas_h;

  for (const auto& lb : ann.boxes) {
    auto rotated = rotate_box(lb.box, a, w, h);
    std::optional<BBox> clipped =
        rotated ? clip_to_canvas(*rotated, canvas_w, canvas_h) : std::nullopt;
    if (clipped) {
      result.annotation.boxes.push_back(LabeledBox{lb.category_id, *clipped});
    } else {
      ++result.dropped_boxes;
    }
  }

  for (const auto& lp : ann.polygons) {
    std::vector<Point> vertices;
    vertices.reserve(lp.polygon.size());
    for (const auto& v : lp.polygon.vertices()) {
      Point q = rotate_point(v, a, w, h);
      q.x = std::clamp(q.x, 0.0, double(canvas_w));
      q.y = std::clamp(q.y, 0.0, double(canvas_h));
      if (vertices.empty() || !(vertices.back() == q)) vertices.push_back(q);
    }
    while (vertices.size() >= 2 && vertices.front() == vertices.back()) {
      vertices.pop_back();
    }
    if (vertices.size() >= 3) {
      result.annotation.polygons.push_back(
          LabeledPolygon{lp.category_id, Polygon(std::move(vertices))});
    } else {
      ++result.dropped_polygons;
    }
  }
  return result;
}

TransformResult apply_crop(const ImageAnnotation& ann, const BBox& window,
                           double min_kept_fraction) {
  TransformResult result;
  result.annotation.image_id = ann.image_id;
  result.annotation.file_name = ann.file_name;
  result.annotation.width = pixel_extent(window.width());
  result.annotation.height = pixel_extent(window.height());

  for (const auto& lb : ann.boxes) {
    if (auto cropped = crop_box(lb.box, window, min_kept_fraction)) {
      result.annotation.boxes.push_back(LabeledBox{lb.category_id, *cropped});
    } else {
      ++result.dropped_boxes;
    }
  }

  for (const auto& lp : ann.polygons) {
    const auto inside = [&](const Point& v) {
      return v.x >= window.xmin() && v.x <= window.xmax() &&
             v.y >= window.ymin() && v.y <= window.ymax();
    };
    if (std::all_of(lp.polygon.vertices().begin(),
                    lp.polygon.vertices().end(), inside)) {
      std::vector<Point> vertices;
      vertices.reserve(lp.polygon.size());
      for (const auto& v : lp.polygon.vertices()) {
        vertices.push_back(Point{v.x - window.xmin(), v.y - window.ymin()});
      }
      result.annotation.polygons.push_back(
          LabeledPolygon{lp.category_id, Polygon(std::move(vertices))});
    } else {
      ++result.dropped_polygons;
    }
  }
  return result;
}

std::string write_plan(const AugmentPlan& plan) {
  json root;
  root["seed"] = plan.seed;
  root["items"] = json::array();
  for (const auto& item : plan.items) {
    root["items"].push_back(
        {{"image_id", item.image_id},
         {"angle", item.angle},
         {"window", json::array({item.window.xmin(), item.window.ymin(),
                                 item.window.xmax(), item.window.ymax()})}});
  }
  return root.dump(2) + "\n";
}

AugmentPlan read_plan(const std::string& json_text) {
  try {
    const json root = json::parse(json_text);
    AugmentPlan plan;
    plan.seed = root.at("seed").get<std::uint64_t>();
    for (const auto& item : root.at("items")) {
      const auto& w = item.at("window");
      plan.items.push_back(
          AugmentItem{item.at("image_id").get<std::int64_t>(),
                      item.at("angle").get<double>(),
                      BBox(w.at(0).get<double>(), w.at(1).get<double>(),
                           w.at(2).get<double>(), w.at(3).get<double>())});
    }
    return plan;
  } catch (const json::exception& e) {
    throw ParseError(std::string("augment plan: ") + e.what());
  }
}

}  // namespace canopy
