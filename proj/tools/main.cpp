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

// canopy: dataset toolchain and evaluator for leaf-disease object detection.
//
// Subcommands: validate, pack, split, augment, evaluate, damage.
// Exit codes: 0 success, 1 domain failure (violations, unknown ids),
// 2 environment/IO failure. Set CANOPY_LOG=0|1|2 for quiet/info/debug.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "canopy/annotation.hpp"
#include "canopy/augment.hpp"
#include "canopy/damage.hpp"
#include "canopy/error.hpp"
#include "canopy/io_util.hpp"
#include "canopy/metrics.hpp"
#include "canopy/parallel.hpp"
#include "canopy/record.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("CANOPY_LOG");
    if (!env) return 1;
    const std::string value(env);
    if (value == "0" || value == "quiet") return 0;
    if (value == "2" || value == "debug") return 2;
    return 1;
  }();
  return level;
}

void log_info(const std::string& message) {
  if (log_level() >= 1) std::cerr << message << "\n";
}

void log_debug(const std::string& message) {
  if (log_level() >= 2) std::cerr << message << "\n";
}

// ---------------------------------------------------------------------------
// Configuration: defaults, overridden by --config JSON, overridden by flags.
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string input;
  std::string out;
  std::string detections_path;
  std::string images_dir;
  std::string leaf_category = "leave";
  std::vector<std::string> disease_categories;  // empty: all non-leaf
  std::vector<std::string> category_order;
  std::uint64_t seed = 42;
  double eval_fraction = 0.1;
  int num_shards = 1;
  double iou = 0.5;
  int max_kept = 200;
  double min_kept_fraction = 0.3;
  bool right_angles = false;
  bool apply_nms = false;
  bool render = false;
  std::string render_format = "pgm";
  int workers = 1;
};

/// Effective semantic configuration, echoed into every output manifest.
/// Execution-only knobs (workers, output directory, log level) are excluded
/// so reruns with different parallelism stay byte-identical.
json config_echo(const RunConfig& c) {
  return json{{"input", c.input},
              {"seed", c.seed},
              {"eval_fraction", c.eval_fraction},
              {"num_shards", c.num_shards},
              {"iou", c.iou},
              {"max_kept", c.max_kept},
              {"min_kept_fraction", c.min_kept_fraction},
              {"right_angles", c.right_angles},
              {"nms", c.apply_nms},
              {"render", c.render},
              {"render_format", c.render_format},
              {"leaf_category", c.leaf_category},
              {"disease_categories", c.disease_categories},
              {"category_order", c.category_order}};
}

/// Registers the shared flags on a subcommand and wires up the config-file
/// merge. Flags given on the command line win over --config values, which
/// win over defaults; CLI11 reports which flags were actually set.
void add_shared_options(CLI::App& cmd, RunConfig& config,
                        std::string& config_path) {
  cmd.add_option("--config", config_path, "JSON config file");
  cmd.add_option("--seed", config.seed, "Seed for all randomized steps")
      ->capture_default_str();
  cmd.add_option("--eval-fraction", config.eval_fraction,
                 "Fraction of images held out for evaluation")
      ->capture_default_str();
  cmd.add_option("--num-shards", config.num_shards,
                 "Record shards per split")
      ->capture_default_str();
  cmd.add_option("--iou", config.iou, "IOU threshold for --nms suppression")
      ->capture_default_str();
  cmd.add_option("--max-kept", config.max_kept,
                 "Maximum boxes kept per image by --nms")
      ->capture_default_str();
  cmd.add_option("--min-kept-fraction", config.min_kept_fraction,
                 "Minimum surviving area fraction for cropped boxes")
      ->capture_default_str();
  cmd.add_option("--workers", config.workers, "Worker threads")
      ->capture_default_str();
  cmd.add_option("--category-order", config.category_order,
                 "Fixed category order (ids assigned 1..K in this order)")
      ->delimiter(',');
}

void merge_config_file(CLI::App& cmd, RunConfig& config,
                       const std::string& config_path) {
  if (config_path.empty()) return;
  json file;
  try {
    file = json::parse(canopy::read_file(config_path));
  } catch (const json::exception& e) {
    throw canopy::ParseError("config file: " + std::string(e.what()));
  }
  const auto flag_set = [&](const std::string& name) {
    const auto* opt = cmd.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  const auto load = [&](const char* key, const char* flag, auto& into) {
    if (file.contains(key) && !flag_set(flag)) {
      file.at(key).get_to(into);
    }
  };
  load("seed", "--seed", config.seed);
  load("eval_fraction", "--eval-fraction", config.eval_fraction);
  load("num_shards", "--num-shards", config.num_shards);
  load("iou", "--iou", config.iou);
  load("max_kept", "--max-kept", config.max_kept);
  load("min_kept_fraction", "--min-kept-fraction", config.min_kept_fraction);
  load("workers", "--workers", config.workers);
  load("category_order", "--category-order", config.category_order);
  load("leaf_category", "--leaf-category", config.leaf_category);
  load("disease_categories", "--disease-categories",
       config.disease_categories);
  load("right_angles", "--right-angles", config.right_angles);
}

// ---------------------------------------------------------------------------
// Dataset loading: a combined-index JSON file or a directory of VOC XML and
// polygon JSON annotation documents.
// ---------------------------------------------------------------------------

struct LoadResult {
  canopy::DatasetIndex index;
  std::vector<std::string> parse_errors;
  std::vector<std::string> io_errors;
  int files_parsed = 0;
};

LoadResult load_dataset(const std::string& input,
                        const std::vector<std::string>& category_order) {
  LoadResult result;
  const fs::path path(input);
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) {
    result.index = canopy::read_index(canopy::read_file(path));
    result.files_parsed = 1;
    return result;
  }
  if (!fs::is_directory(path, ec)) {
    throw canopy::IoError("input path not found: " + input);
  }

  // Merge per-image parses by file name: an image may have its boxes in a
  // VOC XML and its polygons in a labelme JSON.
  std::map<std::string, canopy::ParsedImage> by_name;
  const auto absorb = [&](canopy::ParsedImage parsed,
                          const fs::path& source) {
    auto [it, inserted] = by_name.try_emplace(parsed.file_name, parsed);
    if (inserted) return;
    canopy::ParsedImage& existing = it->second;
    if (existing.width != parsed.width || existing.height != parsed.height) {
      result.parse_errors.push_back(source.string() +
                                    ": image size disagrees with an earlier "
                                    "annotation for " +
                                    parsed.file_name);
      return;
    }
    for (auto& box : parsed.named_boxes) existing.named_boxes.push_back(box);
    for (auto& poly : parsed.named_polygons) {
      existing.named_polygons.push_back(std::move(poly));
    }
    existing.skipped_shapes += parsed.skipped_shapes;
  };

  for (const auto& file : canopy::list_files(path, ".xml")) {
    ++result.files_parsed;
    try {
      absorb(canopy::parse_voc_xml(canopy::read_file(file)), file);
    } catch (const canopy::IoError& e) {
      result.io_errors.push_back(file.string() + ": " + e.what());
    } catch (const canopy::ParseError& e) {
      result.parse_errors.push_back(file.string() + ": " + e.what());
    }
  }
  for (const auto& file : canopy::list_files(path, ".json")) {
    ++result.files_parsed;
    try {
      auto parsed = canopy::parse_polygon_json(canopy::read_file(file));
      if (parsed.skipped_shapes > 0) {
        log_debug(file.string() + ": skipped " +
                  std::to_string(parsed.skipped_shapes) +
                  " non-polygon shape(s)");
      }
      absorb(std::move(parsed), file);
    } catch (const canopy::IoError& e) {
      result.io_errors.push_back(file.string() + ": " + e.what());
    } catch (const canopy::ParseError& e) {
      result.parse_errors.push_back(file.string() + ": " + e.what());
    }
  }

  std::vector<canopy::ParsedImage> parses;
  parses.reserve(by_name.size());
  for (auto& [name, parsed] : by_name) parses.push_back(std::move(parsed));
  result.index = canopy::build_index(
      std::move(parses), category_order.empty()
                             ? std::nullopt
                             : std::make_optional(category_order));
  return result;
}

/// Loads, reports parse errors and violations, and returns the index only
/// when fully clean.
canopy::DatasetIndex load_clean_or_fail(const RunConfig& config) {
  LoadResult loaded = load_dataset(config.input, config.category_order);
  for (const auto& message : loaded.io_errors) {
    std::cerr << "io error: " << message << "\n";
  }
  for (const auto& message : loaded.parse_errors) {
    std::cerr << "parse error: " << message << "\n";
  }
  const auto violations = canopy::validate(loaded.index);
  for (const auto& v : violations) {
    std::cerr << "violation: " << v.file_name
              << (v.object.empty() ? "" : " " + v.object) << ": " << v.message
              << "\n";
  }
  if (!loaded.io_errors.empty()) {
    throw canopy::IoError("unreadable input files; aborting");
  }
  if (!loaded.parse_errors.empty() || !violations.empty()) {
    throw canopy::Error("input dataset has errors; aborting");
  }
  return std::move(loaded.index);
}

void write_text(const fs::path& path, const std::string& text) {
  canopy::atomic_write_file(path, text);
  log_debug("wrote " + path.string());
}

fs::path ensure_out_dir(const std::string& out) {
  if (out.empty()) throw canopy::Error("--out is required");
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw canopy::IoError("cannot create " + out + ": " + ec.message());
  return dir;
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

int run_validate(const RunConfig& config, const std::string& write_index_to) {
  LoadResult loaded = load_dataset(config.input, config.category_order);
  for (const auto& message : loaded.io_errors) {
    std::cerr << "io error: " << message << "\n";
  }
  for (const auto& message : loaded.parse_errors) {
    std::cerr << "parse error: " << message << "\n";
  }
  const auto violations = canopy::validate(loaded.index);
  for (const auto& v : violations) {
    std::cout << v.file_name << (v.object.empty() ? "" : " " + v.object)
              << ": " << v.message << "\n";
  }
  std::cout << violations.size() << " violations\n";
  if (!loaded.io_errors.empty()) return 2;
  if (!write_index_to.empty() && loaded.parse_errors.empty() &&
      violations.empty()) {
    write_text(write_index_to, canopy::write_index(loaded.index));
    log_info("index written to " + write_index_to);
  }
  return (loaded.parse_errors.empty() && violations.empty()) ? 0 : 1;
}

int run_split(const RunConfig& config) {
  const auto index = load_clean_or_fail(config);
  std::vector<std::int64_t> ids;
  for (const auto& image : index.images) ids.push_back(image.image_id);
  const auto plan =
      canopy::split_train_eval(ids, config.eval_fraction, config.seed);
  const fs::path dir = ensure_out_dir(config.out);
  write_text(dir / "split.json", canopy::write_split_plan(plan));
  std::cout << "train " << plan.train.size() << " / eval " << plan.eval.size()
            << "\n";
  return 0;
}

int run_pack(const RunConfig& config) {
  const auto index = load_clean_or_fail(config);
  const fs::path dir = ensure_out_dir(config.out);

  std::vector<std::int64_t> ids;
  std::map<std::int64_t, const canopy::ImageAnnotation*> by_id;
  for (const auto& image : index.images) {
    ids.push_back(image.image_id);
    by_id[image.image_id] = &image;
  }
  const auto plan =
      canopy::split_train_eval(ids, config.eval_fraction, config.seed);

  const auto encode_set = [&](const std::vector<std::int64_t>& set_ids) {
    std::vector<std::vector<std::uint8_t>> encoded(set_ids.size());
    canopy::parallel_for(set_ids.size(), config.workers, [&](std::size_t i) {
      const canopy::ImageAnnotation& image = *by_id.at(set_ids[i]);
      canopy::ExamplePayload payload;
      payload.file_name = image.file_name;
      payload.width = static_cast<std::uint32_t>(image.width);
      payload.height = static_cast<std::uint32_t>(image.height);
      if (!config.images_dir.empty()) {
        const fs::path image_path = fs::path(config.images_dir) / image.file_name;
        std::error_code ec;
        if (fs::is_regular_file(image_path, ec)) {
          const std::string bytes = canopy::read_file(image_path);
          payload.image_bytes.assign(bytes.begin(), bytes.end());
        }
      }
      for (const auto& lb : image.boxes) {
        payload.boxes.push_back(canopy::BoxEntry{lb.category_id,
                                                 lb.box.xmin(), lb.box.ymin(),
                                                 lb.box.xmax(), lb.box.ymax()});
        payload.labels.push_back(index.categories.name_of(lb.category_id));
      }
      encoded[i] = canopy::encode_example(payload);
    });
    return encoded;
  };

  const auto train_shards = canopy::write_shards(
      encode_set(plan.train), dir, "train", config.num_shards);
  const auto eval_shards = canopy::write_shards(
      encode_set(plan.eval), dir, "eval", config.num_shards);

  const auto shard_list = [](const std::vector<canopy::RecordShard>& shards) {
    json list = json::array();
    for (const auto& shard : shards) {
      list.push_back({{"file", shard.path.filename().string()},
                      {"records", shard.record_count}});
    }
    return list;
  };
  json manifest{{"config", config_echo(config)},
                {"train", {{"count", plan.train.size()},
                           {"shards", shard_list(train_shards)}}},
                {"eval", {{"count", plan.eval.size()},
                          {"shards", shard_list(eval_shards)}}},
                {"split", {{"seed", plan.seed},
                           {"train", plan.train},
                           {"eval", plan.eval}}}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "packed train " << plan.train.size() << " / eval "
            << plan.eval.size() << " into " << config.num_shards
            << " shard(s) each\n";
  return 0;
}

int run_augment(const RunConfig& config) {
  const auto index = load_clean_or_fail(config);
  const fs::path dir = ensure_out_dir(config.out);

  canopy::AugmentConfig augment_config;
  augment_config.right_angles_only = config.right_angles;
  augment_config.min_kept_fraction = config.min_kept_fraction;
  const auto plan = canopy::plan(index, config.seed, augment_config);

  std::int64_t base_id = 0;
  for (const auto& image : index.images) {
    base_id = std::max(base_id, image.image_id);
  }

  const auto variant_name = [](const std::string& file_name,
                               const char* tag) {
    const fs::path p(file_name);
    fs::path renamed = p.parent_path() / (p.stem().string() + tag);
    renamed += p.extension();
    return renamed.string();
  };

  std::vector<canopy::TransformResult> rotations(plan.items.size());
  std::vector<canopy::TransformResult> crops(plan.items.size());
  canopy::parallel_for(plan.items.size(), config.workers, [&](std::size_t i) {
    const auto& item = plan.items[i];
    const auto& source = index.images[i];
    rotations[i] = canopy::apply_rotation(source, item.angle);
    rotations[i].annotation.image_id = base_id + 2 * std::int64_t(i) + 1;
    rotations[i].annotation.file_name =
        variant_name(source.file_name, "__rot");
    crops[i] =
        canopy::apply_crop(source, item.window, config.min_kept_fraction);
    crops[i].annotation.image_id = base_id + 2 * std::int64_t(i) + 2;
    crops[i].annotation.file_name = variant_name(source.file_name, "__crop");
  });

  canopy::DatasetIndex augmented;
  augmented.categories = index.categories;
  augmented.images = index.images;
  int dropped_boxes = 0;
  int dropped_polygons = 0;
  for (std::size_t i = 0; i < plan.items.size(); ++i) {
    dropped_boxes += rotations[i].dropped_boxes + crops[i].dropped_boxes;
    dropped_polygons +=
        rotations[i].dropped_polygons + crops[i].dropped_polygons;
    augmented.images.push_back(std::move(rotations[i].annotation));
    augmented.images.push_back(std::move(crops[i].annotation));
  }

  write_text(dir / "plan.json", canopy::write_plan(plan));
  write_text(dir / "augmented_index.json", canopy::write_index(augmented));
  json manifest{{"config", config_echo(config)},
                {"originals", index.images.size()},
                {"rotation_variants", plan.items.size()},
                {"crop_variants", plan.items.size()},
                {"total", augmented.images.size()},
                {"dropped_boxes", dropped_boxes},
                {"dropped_polygons", dropped_polygons},
                {"degenerate_crops", plan.degenerate_crops}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << index.images.size() << " originals + " << 2 * plan.items.size()
            << " variants = " << augmented.images.size() << " total\n";
  return 0;
}

int run_evaluate(const RunConfig& config) {
  const auto index = load_clean_or_fail(config);
  if (config.detections_path.empty()) {
    throw canopy::Error("--detections is required");
  }
  auto detections =
      canopy::parse_detections(canopy::read_file(config.detections_path));

  if (config.apply_nms) {
    std::map<std::int64_t, std::vector<canopy::Detection>> by_image;
    for (const auto& det : detections) by_image[det.image_id].push_back(det);
    std::vector<canopy::Detection> kept;
    for (const auto& [image_id, dets] : by_image) {
      const auto suppressed = canopy::nms(
          dets, config.iou, static_cast<std::size_t>(config.max_kept));
      kept.insert(kept.end(), suppressed.begin(), suppressed.end());
    }
    log_info("nms kept " + std::to_string(kept.size()) + " of " +
             std::to_string(detections.size()) + " detections");
    detections = std::move(kept);
  }

  const auto report = canopy::map_range(index, detections);
  const fs::path dir = ensure_out_dir(config.out);
  json report_json = json::parse(canopy::write_report_json(report));
  report_json["config"] = config_echo(config);
  write_text(dir / "report.json", report_json.dump(2) + "\n");
  const std::string table = canopy::format_report_table(report);
  write_text(dir / "table.txt", table);
  std::cout << table;
  return 0;
}

// Instance-mask JSON for one image:
// {instances:[{category_id, score, roi:[y1,x1,y2,x2],
//              mask:{size:[h,w], counts:[...]}}]}.
std::vector<canopy::InstanceMask> parse_instance_file(
    const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw canopy::ParseError(source + ": " + e.what());
  }
  if (!doc.contains("instances")) {
    throw canopy::ParseError(source + ": missing 'instances'");
  }
  std::vector<canopy::InstanceMask> instances;
  try {
    for (const auto& inst : doc.at("instances")) {
      const auto& roi = inst.at("roi");
      const auto& mask = inst.at("mask");
      const auto& size = mask.at("size");
      const int height = size.at(0).get<int>();
      const int width = size.at(1).get<int>();
      instances.emplace_back(
          inst.at("category_id").get<int>(),
          canopy::Roi(roi.at(0).get<double>(), roi.at(1).get<double>(),
                      roi.at(2).get<double>(), roi.at(3).get<double>()),
          canopy::rle_decode(
              width, height,
              mask.at("counts").get<std::vector<std::int64_t>>()),
          inst.contains("score") ? inst.at("score").get<double>() : 1.0);
    }
  } catch (const json::exception& e) {
    throw canopy::ParseError(source + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw canopy::ParseError(source + ": " + e.what());
  }
  return instances;
}

struct DamageInput {
  std::string name;  // image file name or stem
  std::vector<canopy::InstanceMask> instances;
  int skipped_empty_polygons = 0;
  int self_intersecting_polygons = 0;
};

int resolve_category(const std::string& value,
                     const canopy::CategoryMap& categories) {
  if (!value.empty() &&
      std::all_of(value.begin(), value.end(),
                  [](unsigned char c) { return std::isdigit(c); })) {
    return std::stoi(value);
  }
  const auto id = categories.id_of(value);
  if (!id) throw canopy::Error("unknown category '" + value + "'");
  return *id;
}

int run_damage(const RunConfig& config) {
  const fs::path input(config.input);
  std::vector<DamageInput> images;
  canopy::CategoryMap categories;

  std::error_code ec;
  const bool is_file = fs::is_regular_file(input, ec);
  const bool is_dir = !is_file && fs::is_directory(input, ec);
  if (!is_file && !is_dir) {
    throw canopy::IoError("input path not found: " + config.input);
  }

  bool have_index = false;
  if (is_file) {
    const json probe = json::parse(canopy::read_file(input));
    have_index = probe.contains("annotations") && probe.contains("images");
  }

  if (have_index) {
    const auto index = canopy::read_index(canopy::read_file(input));
    categories = index.categories;
    images.resize(index.images.size());
    canopy::parallel_for(
        index.images.size(), config.workers, [&](std::size_t i) {
          const auto& image = index.images[i];
          DamageInput item;
          item.name = image.file_name;
          for (const auto& lp : image.polygons) {
            const auto mask =
                canopy::polygon_to_mask(lp.polygon, image.width, image.height);
            if (canopy::mask_area(mask) == 0) {
              ++item.skipped_empty_polygons;
              continue;
            }
            if (canopy::polygon_self_intersects(lp.polygon)) {
              ++item.self_intersecting_polygons;
            }
            item.instances.emplace_back(lp.category_id,
                                        canopy::mask_to_roi(mask), mask, 1.0);
          }
          images[i] = std::move(item);
        });
  } else {
    std::vector<fs::path> files;
    if (is_file) {
      files.push_back(input);
    } else {
      files = canopy::list_files(input, ".json");
    }
    images.resize(files.size());
    canopy::parallel_for(files.size(), config.workers, [&](std::size_t i) {
      DamageInput item;
      item.name = files[i].stem().string();
      item.instances =
          parse_instance_file(canopy::read_file(files[i]), files[i].string());
      images[i] = std::move(item);
    });
  }

  const int leaf_id = resolve_category(config.leaf_category, categories);
  std::set<int> disease_ids;
  if (config.disease_categories.empty()) {
    // All category ids seen on the instances, minus the leaf id.
    for (const auto& image : images) {
      for (const auto& inst : image.instances) {
        if (inst.category_id() != leaf_id) {
          disease_ids.insert(inst.category_id());
        }
      }
    }
  } else {
    for (const auto& value : config.disease_categories) {
      disease_ids.insert(resolve_category(value, categories));
    }
  }

  const fs::path dir = ensure_out_dir(config.out);
  json image_reports = json::array();
  std::size_t total_leaves = 0;
  for (const auto& image : images) {
    const auto assignment =
        canopy::assign(image.instances, leaf_id, disease_ids);
    json leaves = json::array();
    for (const auto& leaf : assignment.leaves) {
      ++total_leaves;
      const auto& leaf_instance = image.instances[leaf.leaf_index];
      std::vector<canopy::InstanceMask> owned;
      for (const std::size_t d : leaf.disease_indices) {
        owned.push_back(image.instances[d]);
      }
      if (canopy::mask_area(leaf_instance.mask()) == 0) {
        leaves.push_back({{"leaf_index", leaf.leaf_index},
                          {"error", "empty leaf mask"}});
        continue;
      }
      auto report = canopy::damage_percentage(leaf_instance, owned);
      report.leaf_index = leaf.leaf_index;
      report.disease_indices = leaf.disease_indices;
      leaves.push_back({{"leaf_index", report.leaf_index},
                        {"disease_indices", report.disease_indices},
                        {"leaf_area_px", report.leaf_area_px},
                        {"disease_area_px", report.disease_area_px},
                        {"damage_pct", report.damage_pct}});

      if (config.render) {
        const bool png = config.render_format == "png";
        const std::string stem =
            fs::path(image.name).stem().string() + "_leaf" +
            std::to_string(leaf.leaf_index);
        const auto write_mask = [&](const std::string& name,
                                    const canopy::BinaryMask& mask) {
          const std::string ext = png ? ".png" : ".pgm";
          write_text(dir / (name + ext), png ? canopy::mask_to_png(mask)
                                             : canopy::mask_to_pgm(mask));
        };
        write_mask(stem, leaf_instance.mask());
        canopy::BinaryMask disease_union(leaf_instance.mask().width(),
                                         leaf_instance.mask().height());
        if (!owned.empty()) {
          std::vector<canopy::BinaryMask> owned_masks;
          for (const auto& d : owned) owned_masks.push_back(d.mask());
          disease_union = canopy::union_masks(owned_masks);
        }
        write_mask(stem + "_disease", disease_union);
      }
    }
    json entry{{"image", image.name},
               {"leaves", leaves},
               {"unowned_diseases", assignment.unowned_diseases}};
    if (image.skipped_empty_polygons > 0) {
      entry["skipped_empty_polygons"] = image.skipped_empty_polygons;
    }
    if (image.self_intersecting_polygons > 0) {
      entry["self_intersecting_polygons"] = image.self_intersecting_polygons;
    }
    image_reports.push_back(std::move(entry));
  }

  if (total_leaves == 0) {
    throw canopy::Error("no leaf instances found for category id " +
                        std::to_string(leaf_id));
  }

  json report{{"config", config_echo(config)},
              {"leaf_category_id", leaf_id},
              {"disease_category_ids", disease_ids},
              {"images", image_reports}};
  write_text(dir / "damage.json", report.dump(2) + "\n");
  std::cout << "damage report for " << total_leaves << " leaf instance(s) in "
            << images.size() << " image(s)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"canopy: leaf-disease detection dataset toolchain"};
  app.require_subcommand(1);

  RunConfig config;
  std::string config_path;
  std::string write_index_to;

  auto* validate = app.add_subcommand(
      "validate", "Parse annotations and report invariant violations");
  validate->add_option("--input", config.input, "Annotation dir or index JSON")
      ->required();
  validate->add_option("--write-index", write_index_to,
                       "Write the combined index JSON here when clean");

  auto* pack = app.add_subcommand(
      "pack", "Split the dataset and write train/eval record shards");
  pack->add_option("--input", config.input, "Annotation dir or index JSON")
      ->required();
  pack->add_option("--out", config.out, "Output directory")->required();
  pack->add_option("--images", config.images_dir,
                   "Directory of image files to embed in records");

  auto* split = app.add_subcommand(
      "split", "Write a deterministic train/eval split plan");
  split->add_option("--input", config.input, "Annotation dir or index JSON")
      ->required();
  split->add_option("--out", config.out, "Output directory")->required();

  auto* augment = app.add_subcommand(
      "augment", "Plan and apply rotation and crop variants");
  augment->add_option("--input", config.input, "Annotation dir or index JSON")
      ->required();
  augment->add_option("--out", config.out, "Output directory")->required();
  augment->add_flag("--right-angles", config.right_angles,
                    "Restrict rotations to multiples of 90 degrees");

  auto* evaluate = app.add_subcommand(
      "evaluate", "Score detections against ground truth");
  evaluate->add_option("--input", config.input, "Ground-truth dir or index")
      ->required();
  evaluate->add_option("--detections", config.detections_path,
                       "Detections file (JSON lines)")
      ->required();
  evaluate->add_option("--out", config.out, "Output directory")->required();
  evaluate->add_flag("--nms", config.apply_nms,
                     "Apply per-image non-max suppression before scoring");

  auto* damage = app.add_subcommand(
      "damage", "Per-leaf disease damage percentages");
  damage->add_option("--input", config.input,
                     "Instance JSON file/dir or combined index JSON")
      ->required();
  damage->add_option("--out", config.out, "Output directory")->required();
  damage->add_option("--leaf-category", config.leaf_category,
                     "Leaf category name or id")
      ->capture_default_str();
  damage->add_option("--disease-categories", config.disease_categories,
                     "Disease category names or ids (default: all non-leaf)")
      ->delimiter(',');
  damage->add_flag("--render", config.render,
                   "Write per-leaf mask and disease-union images");
  damage->add_option("--render-format", config.render_format,
                     "Rendered mask format: pgm or png")
      ->check(CLI::IsMember({"pgm", "png"}))
      ->capture_default_str();

  for (CLI::App* cmd : {validate, pack, split, augment, evaluate, damage}) {
    add_shared_options(*cmd, config, config_path);
  }

  CLI11_PARSE(app, argc, argv);

  CLI::App* active = app.get_subcommands().front();
  try {
    merge_config_file(*active, config, config_path);
    if (active == validate) return run_validate(config, write_index_to);
    if (active == pack) return run_pack(config);
    if (active == split) return run_split(config);
    if (active == augment) return run_augment(config);
    if (active == evaluate) return run_evaluate(config);
    if (active == damage) return run_damage(config);
  } catch (const canopy::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const canopy::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
