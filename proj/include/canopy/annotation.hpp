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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "canopy/geometry.hpp"

namespace canopy {

/// Ordered mapping category name -> id. Ids are consecutive and start at 1;
/// id 0 is reserved for background and never assigned.
class CategoryMap {
 public:
  CategoryMap() = default;

  /// Builds the map from a fixed name order; ids follow list order.
  /// Throws std::invalid_argument on empty or duplicate names.
  explicit CategoryMap(const std::vector<std::string>& names);

  /// Returns the id for `name`, inserting it with the next id if new.
  int add(const std::string& name);

  std::optional<int> id_of(const std::string& name) const;
  const std::string& name_of(int id) const;  // throws on unknown id
  bool has_id(int id) const { return id >= 1 && id <= size(); }

  int size() const { return static_cast<int>(names_.size()); }
  /// Names in id order (index 0 holds id 1).
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const CategoryMap&) const = default;

 private:
  std::vector<std::string> names_;
};

struct LabeledBox {
  int category_id = 0;
  BBox box;

  bool operator==(const LabeledBox&) const = default;
};

struct LabeledPolygon {
  int category_id = 0;
  Polygon polygon;

  bool operator==(const LabeledPolygon&) const = default;
};

struct ImageAnnotation {
  std::int64_t image_id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<LabeledBox> boxes;
  std::vector<LabeledPolygon> polygons;

  bool operator==(const ImageAnnotation&) const = default;
};

struct DatasetIndex {
  CategoryMap categories;
  std::vector<ImageAnnotation> images;

  bool operator==(const DatasetIndex&) const = default;
};

/// One parsed annotation document, labels still by name.
struct ParsedImage {
  std::string file_name;
  int width = 0;
  int height = 0;
  std::vector<std::pair<std::string, BBox>> named_boxes;
  std::vector<std::pair<std::string, Polygon>> named_polygons;
  /// Shapes skipped because their shape_type was not "polygon".
  int skipped_shapes = 0;
};

/// Parses one PASCAL VOC XML document:
/// annotation/{filename, size/{width,height}, object*/{name, bndbox}}.
/// Unknown elements are ignored. Throws ParseError naming the offending
/// element on malformed XML, missing fields, non-numeric or inverted boxes.
ParsedImage parse_voc_xml(const std::string& document);

/// Parses one labelme-style polygon JSON document:
/// {shapes:[{label, points, shape_type}], imagePath, imageHeight, imageWidth}.
/// Non-polygon shapes are skipped and counted; embedded imageData is
/// ignored. Throws ParseError on missing keys or polygons with < 3 points.
ParsedImage parse_polygon_json(const std::string& document);

/// Builds a dataset index. Image ids are assigned 1..N in sorted file-name
/// order. Category ids are 1..K in first-seen order unless `fixed_order`
/// supplies the names up front. Throws Error on duplicate file names or on
/// a label missing from a supplied fixed order.
DatasetIndex build_index(
    std::vector<ParsedImage> annotations,
    const std::optional<std::vector<std::string>>& fixed_order = std::nullopt);

struct Violation {
  std::int64_t image_id = 0;
  std::string file_name;
  std::string object;  // e.g. "box 2", "polygon 0", or "" for image-level
  std::string message;
};

/// Every invariant violation in the index: nonpositive dimensions,
/// out-of-bounds boxes, unknown category ids, polygon vertices outside the
/// image, duplicate image ids or file names. Empty result means valid.
std::vector<Violation> validate(const DatasetIndex& index);

/// Combined-index JSON, one file per dataset:
/// {images:[{id,file_name,height,width}], categories:[{id,name}],
///  annotations:[{id,image_id,category_id,bbox:[x,y,w,h],
///                segmentation:[[x1,y1,...]]}]}.
/// Boxes are serialized as [x, y, width, height]; polygon annotations carry
/// their vertex ring plus the polygon's bounding box.
std::string write_index(const DatasetIndex& index);

/// Inverse of write_index. Throws ParseError on schema violations,
/// including any category with id 0 ("background id reserved").
DatasetIndex read_index(const std::string& json_text);

}  // namespace canopy
