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

#include "canopy/annotation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "canopy/error.hpp"
#include "xml_mini.hpp"

namespace canopy {

using nlohmann::json;

CategoryMap::CategoryMap(const std::vector<std::string>& names) {
  for (const auto& name : names) {
    if (name.empty()) throw std::invalid_argument("category name empty");
    if (id_of(name)) throw std::invalid_argument("duplicate category " + name);
    names_.push_back(name);
  }
}

int CategoryMap::add(const std::string& name) {
  if (name.empty()) throw std::invalid_argument("category name empty");
  if (auto id = id_of(name)) return *id;
  names_.push_back(name);
  return size();
}

std::optional<int> CategoryMap::id_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

const std::string& CategoryMap::name_of(int id) const {
  if (!has_id(id)) {
    throw std::invalid_argument("unknown category id " + std::to_string(id));
  }
  return names_[static_cast<std::size_t>(id) - 1];
}

namespace {

std::string trimmed(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& raw, const std::string& where) {
  const std::string text = trimmed(raw);
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty() ||
      !std::isfinite(value)) {
    throw ParseError(where + ": non-numeric value '" + text + "'");
  }
  return value;
}

double element_number(const xml::Element& parent, const char* name,
                      const std::string& where) {
  const auto* child = parent.child(name);
  if (!child) throw ParseError(where + ": missing <" + name + ">");
  return parse_number(child->text, where + "/" + name);
}

}  // namespace

ParsedImage parse_voc_xml(const std::string& document) {
  const auto root = xml::parse(document);
  if (root->name != "annotation") {
    throw ParseError("voc: root element is <" + root->name +
                     ">, expected <annotation>");
  }

  ParsedImage out;
  if (const auto* fn = root->child("filename")) {
    out.file_name = trimmed(fn->text);
  }
  const auto* size = root->child("size");
  if (!size) throw ParseError("voc: missing <size>");
  out.width = static_cast<int>(element_number(*size, "width", "size"));
  out.height = static_cast<int>(element_number(*size, "height", "size"));

  int object_index = 0;
  for (const auto* object : root->children_named("object")) {
    const std::string where = "object " + std::to_string(object_index);
    const auto* name = object->child("name");
    if (!name) throw ParseError("voc: " + where + ": missing <name>");
    const auto* bndbox = object->child("bndbox");
    if (!bndbox) throw ParseError("voc: " + where + ": missing <bndbox>");
    const double xmin = element_number(*bndbox, "xmin", where);
    const double ymin = element_number(*bndbox, "ymin", where);
    const double xmax = element_number(*bndbox, "xmax", where);
    const double ymax = element_number(*bndbox, "ymax", where);
    if (xmax <= xmin || ymax <= ymin) {
      throw ParseError("voc: " + where + ": inverted box [" +
                       std::to_string(xmin) + ", " + std::to_string(ymin) +
                       ", " + std::to_string(xmax) + ", " +
                       std::to_string(ymax) + "]");
    }
    if (xmin < 0.0 || ymin < 0.0) {
      throw ParseError("voc: " + where + ": negative coordinate");
    }
    out.named_boxes.emplace_back(trimmed(name->text),
                                 BBox(xmin, ymin, xmax, ymax));
    ++object_index;
  }
  return out;
}

ParsedImage parse_polygon_json(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    throw ParseError(std::string("polygon json: ") + e.what());
  }

  for (const char* key : {"shapes", "imagePath", "imageHeight", "imageWidth"}) {
    if (!doc.contains(key)) {
      throw ParseError(std::string("polygon json: missing key '") + key + "'");
    }
  }

  ParsedImage out;
  try {
    out.file_name = doc.at("imagePath").get<std::string>();
    out.width = doc.at("imageWidth").get<int>();
    out.height = doc.at("imageHeight").get<int>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("polygon json: bad image fields: ") +
                     e.what());
  }

  int shape_index = 0;
  for (const auto& shape : doc.at("shapes")) {
    const std::string where = "shape " + std::to_string(shape_index++);
    if (!shape.contains("label") || !shape.contains("points") ||
        !shape.contains("shape_type")) {
      throw ParseError("polygon json: " + where +
                       ": missing label/points/shape_type");
    }
    if (shape.at("shape_type").get<std::string>() != "polygon") {
      ++out.skipped_shapes;
      continue;
    }
    const auto& points = shape.at("points");
    if (!points.is_array() || points.size() < 3) {
      throw ParseError("polygon json: " + where + ": degenerate polygon (" +
                       std::to_string(points.size()) + " points)");
    }
    std::vector<Point> vertices;
    vertices.reserve(points.size());
    for (const auto& p : points) {
      if (!p.is_array() || p.size() != 2) {
        throw ParseError("polygon json: " + where + ": bad point");
      }
      vertices.push_back(Point{p[0].get<double>(), p[1].get<double>()});
    }
    try {
      out.named_polygons.emplace_back(shape.at("label").get<std::string>(),
                                      Polygon(std::move(vertices)));
    } catch (const std::invalid_argument& e) {
      throw ParseError("polygon json: " + where + ": " + e.what());
    }
  }
  return out;
}

DatasetIndex build_index(
    std::vector<ParsedImage> annotations,
    const std::optional<std::vector<std::string>>& fixed_order) {
  std::sort(annotations.begin(), annotations.end(),
            [](const ParsedImage& a, const ParsedImage& b) {
              return a.file_name < b.file_name;
            });
  for (std::size_t i = 1; i < annotations.size(); ++i) {
    if (annotations[i].file_name == annotations[i - 1].file_name) {
      throw Error("duplicate file name: " + annotations[i].file_name);
    }
  }

  DatasetIndex index;
  if (fixed_order) index.categories = CategoryMap(*fixed_order);

  const auto resolve = [&](const std::string& label) {
    if (fixed_order) {
      const auto id = index.categories.id_of(label);
      if (!id) throw Error("label '" + label + "' not in fixed order");
      return *id;
    }
    return index.categories.add(label);
  };

  std::int64_t next_id = 1;
  for (auto& parsed : annotations) {
    ImageAnnotation image;
    image.image_id = next_id++;
    image.file_name = parsed.file_name;
    image.width = parsed.width;
    image.height = parsed.height;
    for (auto& [label, box] : parsed.named_boxes) {
      image.boxes.push_back(LabeledBox{resolve(label), box});
    }
    for (auto& [label, poly] : parsed.named_polygons) {
      image.polygons.push_back(LabeledPolygon{resolve(label), std::move(poly)});
    }
    index.images.push_back(std::move(image));
  }
  return index;
}

std::vector<Violation> validate(const DatasetIndex& index) {
  std::vector<Violation> out;
  const auto report = [&](const ImageAnnotation& image,
                          const std::string& object,
                          const std::string& message) {
    out.push_back(Violation{image.image_id, image.file_name, object, message});
  };

  std::set<std::int64_t> seen_ids;
  std::set<std::string> seen_names;
  for (const auto& image : index.images) {
    if (!seen_ids.insert(image.image_id).second) {
      report(image, "", "duplicate image id");
    }
    if (!seen_names.insert(image.file_name).second) {
      report(image, "", "duplicate file name");
    }
    if (image.width <= 0 || image.height <= 0) {
      report(image, "", "nonpositive image dimensions");
      continue;
    }
    const double w = image.width;
    const double h = image.height;
    for (std::size_t i = 0; i < image.boxes.size(); ++i) {
      const auto& lb = image.boxes[i];
      const std::string object = "box " + std::to_string(i);
      if (!index.categories.has_id(lb.category_id)) {
        report(image, object,
               "unknown category id " + std::to_string(lb.category_id));
      }
      if (lb.box.xmin() < 0.0 || lb.box.ymin() < 0.0 || lb.box.xmax() > w ||
          lb.box.ymax() > h) {
        report(image, object, "box outside image bounds");
      }
    }
    for (std::size_t i = 0; i < image.polygons.size(); ++i) {
      const auto& lp = image.polygons[i];
      const std::string object = "polygon " + std::to_string(i);
      if (!index.categories.has_id(lp.category_id)) {
        report(image, object,
               "unknown category id " + std::to_string(lp.category_id));
      }
      for (const auto& v : lp.polygon.vertices()) {
        if (v.x < 0.0 || v.y < 0.0 || v.x > w || v.y > h) {
          report(image, object, "vertex outside image bounds");
          break;
        }
      }
    }
  }
  return out;
}

namespace {

json box_to_xywh(const BBox& b) {
  return json::array({b.xmin(), b.ymin(), b.width(), b.height()});
}

json polygon_to_flat(const Polygon& p) {
  json flat = json::array();
  for (const auto& v : p.vertices()) {
    flat.push_back(v.x);
    flat.push_back(v.y);
  }
  return flat;
}

BBox polygon_hull(const Polygon& p) {
  double min_x = p.vertices()[0].x, max_x = min_x;
  double min_y = p.vertices()[0].y, max_y = min_y;
  for (const auto& v : p.vertices()) {
    min_x = std::min(min_x, v.x);
    max_x = std::max(max_x, v.x);
    min_y = std::min(min_y, v.y);
    max_y = std::max(max_y, v.y);
  }
  // A polygon can be degenerate (collinear ring); pad the hull so the
  // serialized bbox stays a valid rectangle. The ring itself is what is
  // read back, so this stays lossless.
  if (max_x <= min_x) max_x = min_x + 1.0;
  if (max_y <= min_y) max_y = min_y + 1.0;
  return BBox(std::max(0.0, min_x), std::max(0.0, min_y), max_x, max_y);
}

}  // namespace

std::string write_index(const DatasetIndex& index) {
  json root;
  root["images"] = json::array();
  for (const auto& image : index.images) {
    root["images"].push_back({{"id", image.image_id},
                              {"file_name", image.file_name},
                              {"height", image.height},
                              {"width", image.width}});
  }
  root["categories"] = json::array();
  for (int id = 1; id <= index.categories.size(); ++id) {
    root["categories"].push_back(
        {{"id", id}, {"name", index.categories.name_of(id)}});
  }
  root["annotations"] = json::array();
  std::int64_t annotation_id = 1;
  for (const auto& image : index.images) {
    for (const auto& lb : image.boxes) {
      root["annotations"].push_back({{"id", annotation_id++},
                                     {"image_id", image.image_id},
                                     {"category_id", lb.category_id},
                                     {"bbox", box_to_xywh(lb.box)},
                                     {"segmentation", json::array()}});
    }
    for (const auto& lp : image.polygons) {
      root["annotations"].push_back(
          {{"id", annotation_id++},
           {"image_id", image.image_id},
           {"category_id", lp.category_id},
           {"bbox", box_to_xywh(polygon_hull(lp.polygon))},
           {"segmentation", json::array({polygon_to_flat(lp.polygon)})}});
    }
  }
  return root.dump(2) + "\n";
}

DatasetIndex read_index(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("index: ") + e.what());
  }

  for (const char* key : {"images", "categories", "annotations"}) {
    if (!root.contains(key) || !root.at(key).is_array()) {
      throw ParseError(std::string("index: missing array '") + key + "'");
    }
  }

  DatasetIndex index;
  try {
    std::vector<std::pair<int, std::string>> categories;
    for (const auto& c : root.at("categories")) {
      const int id = c.at("id").get<int>();
      if (id == 0) throw ParseError("index: background id reserved");
      if (id < 0) throw ParseError("index: negative category id");
      categories.emplace_back(id, c.at("name").get<std::string>());
    }
    std::sort(categories.begin(), categories.end());
    std::vector<std::string> names;
    for (std::size_t i = 0; i < categories.size(); ++i) {
      if (categories[i].first != static_cast<int>(i) + 1) {
        throw ParseError("index: category ids must be consecutive from 1");
      }
      names.push_back(categories[i].second);
    }
    index.categories = CategoryMap(names);

    std::unordered_map<std::int64_t, std::size_t> by_id;
    for (const auto& im : root.at("images")) {
      ImageAnnotation image;
      image.image_id = im.at("id").get<std::int64_t>();
      image.file_name = im.at("file_name").get<std::string>();
      image.height = im.at("height").get<int>();
      image.width = im.at("width").get<int>();
      if (by_id.count(image.image_id)) {
        throw ParseError("index: duplicate image id " +
                         std::to_string(image.image_id));
      }
      by_id[image.image_id] = index.images.size();
      index.images.push_back(std::move(image));
    }

    for (const auto& a : root.at("annotations")) {
      const auto image_id = a.at("image_id").get<std::int64_t>();
      const auto it = by_id.find(image_id);
      if (it == by_id.end()) {
        throw ParseError("index: annotation references unknown image " +
                         std::to_string(image_id));
      }
      ImageAnnotation& image = index.images[it->second];
      const int category_id = a.at("category_id").get<int>();
      if (category_id == 0) throw ParseError("index: background id reserved");
      if (!index.categories.has_id(category_id)) {
        throw ParseError("index: unknown category id " +
                         std::to_string(category_id));
      }
      const bool has_segmentation =
          a.contains("segmentation") && !a.at("segmentation").empty();
      if (has_segmentation) {
        const auto& ring = a.at("segmentation").at(0);
        if (!ring.is_array() || ring.size() < 6 || ring.size() % 2 != 0) {
          throw ParseError("index: bad segmentation ring");
        }
        std::vector<Point> vertices;
        for (std::size_t i = 0; i < ring.size(); i += 2) {
          vertices.push_back(
              Point{ring[i].get<double>(), ring[i + 1].get<double>()});
        }
        image.polygons.push_back(
            LabeledPolygon{category_id, Polygon(std::move(vertices))});
      } else {
        const auto& bbox = a.at("bbox");
        if (!bbox.is_array() || bbox.size() != 4) {
          throw ParseError("index: bbox must be [x, y, w, h]");
        }
        const double x = bbox[0].get<double>();
        const double y = bbox[1].get<double>();
        const double w = bbox[2].get<double>();
        const double h = bbox[3].get<double>();
        if (w <= 0.0 || h <= 0.0) {
          throw ParseError("index: nonpositive bbox size");
        }
        image.boxes.push_back(LabeledBox{category_id, BBox(x, y, x + w, y + h)});
      }
    }
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(std::string("index: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("index: ") + e.what());
  }
  return index;
}

}  // namespace canopy
