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

// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "canopy/annotation.hpp"
#include "canopy/augment.hpp"
#include "canopy/damage.hpp"
#include "canopy/error.hpp"
#include "canopy/geometry.hpp"
#include "canopy/io_util.hpp"
#include "canopy/metrics.hpp"
#include "canopy/record.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace canopy;

namespace {

int failures = 0;

void criterion(const std::string& name, const std::function<bool()>& body,
               long long budget_ms = 0) {
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  std::string note;
  try {
    ok = body();
  } catch (const std::exception& e) {
    note = std::string(" (") + e.what() + ")";
  }
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  if (ok && budget_ms > 0 && elapsed >= budget_ms) {
    ok = false;
    note = " (over the " + std::to_string(budget_ms) + " ms budget)";
  }
  std::printf("[%s] %s (%lld ms)%s\n", ok ? "PASS" : "FAIL", name.c_str(),
              static_cast<long long>(elapsed), note.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

bool require(bool condition, const char* what) {
  if (!condition) {
    std::printf("       failed: %s\n", what);
  }
  return condition;
}

// --------------------------------------------------------------------------
// Criterion 1: IOU oracle equivalence.
// --------------------------------------------------------------------------

bool iou_oracle_equivalence() {
  std::mt19937 rng(1001);
  std::uniform_int_distribution<int> coord(0, 99);
  bool ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto sample = [&] {
      const int x1 = coord(rng);
      const int y1 = coord(rng);
      std::uniform_int_distribution<int> x2(x1 + 1, 100);
      std::uniform_int_distribution<int> y2(y1 + 1, 100);
      return oracle::GridBox{x1, y1, x2(rng), y2(rng)};
    };
    const oracle::GridBox a = sample();
    const oracle::GridBox b = sample();
    const double fast = iou(BBox(a.xmin, a.ymin, a.xmax, a.ymax),
                            BBox(b.xmin, b.ymin, b.xmax, b.ymax));
    const double counted = oracle::grid_iou(a, b);
    if (std::abs(fast - counted) > 1e-9) {
      ok = false;
      break;
    }
  }
  const double worked = iou(BBox(0, 0, 10, 10), BBox(5, 0, 15, 10));
  ok = require(ok, "random grid pair mismatch") &
       require(worked == 1.0 / 3.0, "worked case is not exactly 1/3");
  return ok;
}

// --------------------------------------------------------------------------
// Criterion 2: AP/mAP oracle equivalence on random desk-scale scenes.
// --------------------------------------------------------------------------

struct Scene {
  DatasetIndex index;
  std::vector<Detection> detections;
};

Scene random_scene(std::mt19937& rng) {
  Scene scene;
  scene.index.categories = CategoryMap({"red_rust", "helopeltis",
                                        "red_spider_mite"});
  std::uniform_int_distribution<int> image_count(1, 5);
  std::uniform_int_distribution<int> gt_count(0, 6);
  std::uniform_int_distribution<int> det_count(0, 8);
  std::uniform_int_distribution<int> coord(0, 90);
  std::uniform_int_distribution<int> extent(1, 30);
  std::uniform_int_distribution<int> score(0, 256);
  std::uniform_int_distribution<int> jitter(-6, 6);
  const auto random_box = [&] {
    const int x1 = coord(rng);
    const int y1 = coord(rng);
    return BBox(x1, y1, std::min(100, x1 + extent(rng)),
                std::min(100, y1 + extent(rng)));
  };
  const int images = image_count(rng);
  for (int i = 0; i < images; ++i) {
    ImageAnnotation image;
    image.image_id = i + 1;
    image.file_name = "img" + std::to_string(i) + ".jpg";
    image.width = image.height = 100;
    for (int c = 1; c <= 3; ++c) {
      const int gts = gt_count(rng);
      for (int g = 0; g < gts; ++g) {
        image.boxes.push_back(LabeledBox{c, random_box()});
      }
      const int dets = det_count(rng);
      for (int d = 0; d < dets; ++d) {
        BBox box = random_box();
        if (!image.boxes.empty() && d % 2 == 0) {
          const BBox& base =
              image.boxes[std::size_t(d) % image.boxes.size()].box;
          const double x1 = std::max(0.0, base.xmin() + jitter(rng));
          const double y1 = std::max(0.0, base.ymin() + jitter(rng));
          box = BBox(x1, y1, std::max(x1 + 1.0, base.xmax() + jitter(rng)),
                     std::max(y1 + 1.0, base.ymax() + jitter(rng)));
        }
        scene.detections.push_back(
            Detection{image.image_id, c, score(rng) / 256.0, box});
      }
    }
    scene.index.images.push_back(std::move(image));
  }
  return scene;
}

bool ap_oracle_equivalence() {
  std::mt19937 rng(2002);
  for (int trial = 0; trial < 100; ++trial) {
    const Scene scene = random_scene(rng);
    const EvalReport report = map_range(scene.index, scene.detections);
    const auto thresholds = iou_threshold_sweep();
    double expected_map = 0.0;
    double expected_ar = 0.0;
    for (int c = 1; c <= 3; ++c) {
      std::vector<GroundTruth> gts;
      for (const auto& image : scene.index.images) {
        for (const auto& lb : image.boxes) {
          if (lb.category_id == c) {
            gts.push_back(GroundTruth{image.image_id, c, lb.box});
          }
        }
      }
      std::vector<Detection> dets;
      for (const auto& det : scene.detections) {
        if (det.category_id == c) dets.push_back(det);
      }
      double ap_sum = 0.0;
      double recall_sum = 0.0;
      for (const double threshold : thresholds) {
        ap_sum += oracle::ap_101(gts, dets, threshold);
        recall_sum += oracle::final_recall(gts, dets, threshold);
      }
      const auto& eval = report.categories[std::size_t(c) - 1];
      if (std::abs(eval.ap_mean - ap_sum / 10.0) > 1e-9) return false;
      if (std::abs(eval.recall_mean - recall_sum / 10.0) > 1e-9) return false;
      expected_map += ap_sum / 10.0 / 3.0;
      expected_ar += recall_sum / 10.0 / 3.0;
    }
    if (std::abs(report.map_5095 - expected_map) > 1e-9) return false;
    if (std::abs(report.ar_5095 - expected_ar) > 1e-9) return false;
  }
  return true;
}

// --------------------------------------------------------------------------
// Criterion 3: published arithmetic identities.
// --------------------------------------------------------------------------

DatasetIndex synthetic_index(int image_count) {
  DatasetIndex index;
  index.categories = CategoryMap({"red_rust", "helopeltis",
                                  "red_spider_mite"});
  for (int i = 0; i < image_count; ++i) {
    ImageAnnotation image;
    image.image_id = i + 1;
    char name[32];
    std::snprintf(name, sizeof(name), "img%05d.jpg", i);
    image.file_name = name;
    image.width = 200;
    image.height = 160;
    image.boxes.push_back(
        LabeledBox{1 + i % 3, BBox(20 + i % 40, 15, 90 + i % 40, 70)});
    index.images.push_back(std::move(image));
  }
  return index;
}

bool published_arithmetic() {
  bool ok = true;

  const CornerQuad quad = roi_to_coordinates(Roi(1032, 2139, 1962, 2550));
  ok &= require(quad.top_left == Point{2139, 1032} &&
                    quad.top_right == Point{2550, 1032} &&
                    quad.bottom_right == Point{2550, 1962} &&
                    quad.bottom_left == Point{2139, 1962},
                "roi corner expansion");

  std::vector<std::int64_t> ids(1500);
  std::iota(ids.begin(), ids.end(), 1);
  const SplitPlan plan_1500 = split_train_eval(ids, 0.1, 42);
  ok &= require(plan_1500.train.size() == 1350 &&
                    plan_1500.eval.size() == 150,
                "1500-image split is not 1350/150");

  const AugmentPlan plan_full = plan(synthetic_index(1500), 42);
  ok &= require(1500 + 2 * plan_full.items.size() == 4500,
                "augmentation total is not 4500");
  const AugmentPlan plan_class = plan(synthetic_index(450), 42);
  ok &= require(2 * plan_class.items.size() == 900,
                "450 images do not yield 900 variants");

  std::vector<Detection> disjoint;
  for (int i = 0; i < 250; ++i) {
    const double x = double(i % 50) * 20.0;
    const double y = double(i / 50) * 20.0;
    disjoint.push_back(
        Detection{1, 1, 1.0 - i * 1e-3, BBox(x, y, x + 10, y + 10)});
  }
  ok &= require(nms(disjoint, 0.5).size() == 200,
                "nms does not keep exactly 200 of 250 disjoint boxes");

  const std::vector<std::pair<std::int64_t, std::int64_t>> tp_fp{{8, 2},
                                                                 {5, 5}};
  ok &= require(std::abs(simple_map(tp_fp) - 0.65) < 1e-12,
                "simple mAP of (8,2),(5,5) is not 0.65");
  return ok;
}

// --------------------------------------------------------------------------
// Criterion 4: record integrity.
// --------------------------------------------------------------------------

bool record_integrity() {
  const std::string check = "123456789";
  const auto* p = reinterpret_cast<const std::uint8_t*>(check.data());
  if (!require(crc32c(std::span(p, check.size())) == 0xe3069283u,
               "crc32c check value")) {
    return false;
  }
  if (!require(oracle::crc32c_bitwise(std::span(p, check.size())) ==
                   0xe3069283u,
               "bitwise crc reference check value")) {
    return false;
  }

  // 1000 random payloads across 5 shards roundtrip byte-identically.
  std::mt19937 rng(4004);
  std::uniform_int_distribution<int> len(0, 64);
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<std::vector<std::uint8_t>> payloads;
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::uint8_t> payload(len(rng));
    for (auto& b : payload) b = static_cast<std::uint8_t>(byte(rng));
    payloads.push_back(std::move(payload));
  }
  const fs::path dir = fs::temp_directory_path() / "canopy_acceptance_shards";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto shards = write_shards(payloads, dir, "data", 5);
  const auto back = read_shards_interleaved(shards);
  fs::remove_all(dir);
  if (!require(back == payloads, "sharded roundtrip")) return false;

  // Every single-bit flip in a 3-record file is detected.
  std::stringstream stream;
  const auto as_bytes = [](const char* text) {
    const auto* q = reinterpret_cast<const std::uint8_t*>(text);
    return std::vector<std::uint8_t>(q, q + std::string(text).size());
  };
  write_record(stream, as_bytes("alpha"));
  write_record(stream, as_bytes(""));
  write_record(stream, as_bytes("0123456789abcdef"));
  const std::string wire = stream.str();
  for (std::size_t i = 0; i < wire.size(); ++i) {
    for (int bit = 0; bit < 8; ++bit) {
      std::string corrupted = wire;
      corrupted[i] = static_cast<char>(corrupted[i] ^ (1 << bit));
      std::istringstream in(corrupted);
      bool detected = false;
      try {
        while (read_record(in)) {
        }
      } catch (const CorruptionError&) {
        detected = true;
      }
      if (!detected) {
        return require(false, "a single-bit flip went undetected");
      }
    }
  }
  return true;
}

// --------------------------------------------------------------------------
// Criterion 5: rasterization oracle.
// --------------------------------------------------------------------------

bool rasterization_oracle() {
  std::mt19937 rng(5005);
  std::uniform_int_distribution<int> vertex_count(3, 12);
  std::uniform_real_distribution<double> coord(0.0, 64.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Point> ring;
    const int n = vertex_count(rng);
    for (int i = 0; i < n; ++i) ring.push_back(Point{coord(rng), coord(rng)});
    Polygon poly = [&]() -> Polygon {
      try {
        return Polygon(ring);
      } catch (const std::invalid_argument&) {
        return Polygon({{1, 1}, {9, 1}, {5, 8}});
      }
    }();
    const BinaryMask mask = polygon_to_mask(poly, 64, 64);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        if (mask.at(x, y) != oracle::point_in_polygon_center(
                                 x + 0.5, y + 0.5, poly.vertices())) {
          return require(false, "scanline disagrees with the oracle");
        }
      }
    }
  }
  return true;
}

// --------------------------------------------------------------------------
// Criterion 6: damage pipeline end to end.
// --------------------------------------------------------------------------

bool damage_pipeline() {
  const auto rect = [](int x1, int y1, int x2, int y2) {
    BinaryMask mask(200, 200);
    for (int y = y1; y < y2; ++y) {
      for (int x = x1; x < x2; ++x) mask.set(x, y);
    }
    return mask;
  };
  // Leaf 100x100 = 10000 px.
  const InstanceMask leaf(1, Roi(50, 50, 150, 150),
                          rect(50, 50, 150, 150), 1.0);

  const InstanceMask single(2, Roi(60, 60, 80, 80), rect(60, 60, 80, 80),
                            1.0);
  const LeafDamageReport four = damage_percentage(leaf, {single});
  if (!require(four.leaf_area_px == 10000 && four.disease_area_px == 400 &&
                   four.damage_pct == 4.0,
               "single-disease fixture is not exactly 4.0%")) {
    return false;
  }

  // Two 400 px diseases overlapping by 100 px: union 700 px -> 7.0%.
  const InstanceMask d1(2, Roi(60, 60, 80, 80), rect(60, 60, 80, 80), 1.0);
  const InstanceMask d2(2, Roi(70, 70, 90, 90), rect(70, 70, 90, 90), 1.0);
  const LeafDamageReport seven = damage_percentage(leaf, {d1, d2});
  if (!require(seven.disease_area_px == 700 && seven.damage_pct == 7.0,
               "overlapping-disease fixture is not exactly 7.0%")) {
    return false;
  }

  // A disease straddling the leaf ROI is reported unowned.
  std::vector<InstanceMask> instances;
  instances.push_back(leaf);
  instances.push_back(d1);
  instances.push_back(InstanceMask(2, Roi(120, 120, 170, 170),
                                   rect(120, 120, 170, 170), 1.0));
  const Assignment assignment = assign(instances, 1, {2});
  return require(assignment.leaves.size() == 1 &&
                     assignment.leaves[0].disease_indices ==
                         std::vector<std::size_t>{1} &&
                     assignment.unowned_diseases ==
                         std::vector<std::size_t>{2},
                 "unowned disease is not reported as unowned");
}

// --------------------------------------------------------------------------
// Criterion 7: CLI determinism across reruns and worker counts.
// --------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string command =
      std::string(CANOPY_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  return WEXITSTATUS(std::system(command.c_str()));
}

bool cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "canopy_acceptance_cli";
  fs::remove_all(root);
  const fs::path annotations = root / "annotations";
  fs::create_directories(annotations);

  // Deterministic 30-image fixture.
  const char* labels[3] = {"red_rust", "helopeltis", "red_spider_mite"};
  for (int i = 0; i < 30; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img%03d", i);
    std::string xml = std::string("<annotation><filename>") + name +
                      ".jpg</filename><size><width>160</width>"
                      "<height>120</height></size>";
    for (int b = 0; b <= i % 3; ++b) {
      const int x = 10 + 15 * b + i % 7;
      const int y = 8 + 11 * b + i % 5;
      xml += std::string("<object><name>") + labels[(i + b) % 3] +
             "</name><bndbox><xmin>" + std::to_string(x) + "</xmin><ymin>" +
             std::to_string(y) + "</ymin><xmax>" + std::to_string(x + 30) +
             "</xmax><ymax>" + std::to_string(y + 24) +
             "</ymax></bndbox></object>";
    }
    xml += "</annotation>";
    atomic_write_file(annotations / (std::string(name) + ".xml"), xml);
  }

  // Ground-truth-derived detections for evaluate.
  const fs::path index_path = root / "index.json";
  if (run_cli("validate --input " + annotations.string() + " --write-index " +
              index_path.string()) != 0) {
    return require(false, "fixture validation failed");
  }
  const DatasetIndex index = read_index(read_file(index_path));
  std::string detections;
  std::mt19937 rng(7007);
  std::uniform_int_distribution<int> jitter(-4, 4);
  std::uniform_int_distribution<int> score(1, 255);
  for (const auto& image : index.images) {
    for (const auto& lb : image.boxes) {
      const double x1 = std::max(0.0, lb.box.xmin() + jitter(rng));
      const double y1 = std::max(0.0, lb.box.ymin() + jitter(rng));
      json line = {
          {"image_id", image.image_id},
          {"category_id", lb.category_id},
          {"score", score(rng) / 256.0},
          {"bbox", json::array({x1, y1, std::max(x1 + 1.0, lb.box.xmax()),
                                std::max(y1 + 1.0, lb.box.ymax())})}};
      detections += line.dump() + "\n";
    }
  }
  const fs::path det_path = root / "detections.jsonl";
  atomic_write_file(det_path, detections);

  const auto outputs_match = [&](const fs::path& a, const fs::path& b) {
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      const fs::path twin = b / entry.path().filename();
      if (!fs::exists(twin)) return false;
      if (read_file(entry.path()) != read_file(twin)) return false;
      ++compared;
    }
    return compared > 0;
  };

  struct Job {
    std::string name;
    std::string args;
  };
  const std::vector<Job> jobs{
      {"pack", "pack --input " + annotations.string() +
                   " --seed 13 --eval-fraction 0.2 --num-shards 3"},
      {"augment", "augment --input " + annotations.string() + " --seed 13"},
      {"evaluate", "evaluate --input " + index_path.string() +
                       " --detections " + det_path.string()},
  };
  for (const auto& job : jobs) {
    const fs::path out_1 = root / (job.name + "_w1");
    const fs::path out_8 = root / (job.name + "_w8");
    const fs::path out_repeat = root / (job.name + "_w1r");
    for (const auto& [dir, workers] :
         std::vector<std::pair<fs::path, const char*>>{
             {out_1, "1"}, {out_8, "8"}, {out_repeat, "1"}}) {
      const std::string command = job.args + " --out " + dir.string() +
                                  " --workers " + workers;
      if (run_cli(command) != 0) {
        std::printf("       failed: %s subcommand exited nonzero\n",
                    job.name.c_str());
        return false;
      }
    }
    if (!outputs_match(out_1, out_8) || !outputs_match(out_1, out_repeat)) {
      std::printf("       failed: %s outputs differ across runs\n",
                  job.name.c_str());
      return false;
    }
  }
  fs::remove_all(root);
  return true;
}

}  // namespace

int main() {
  const auto suite_start = std::chrono::steady_clock::now();

  criterion("iou matches the grid-counting oracle (1000 random pairs)",
            iou_oracle_equivalence, 5000);
  criterion("map_range matches the staircase oracle (100 random scenes)",
            ap_oracle_equivalence, 30000);
  criterion("published arithmetic is reproduced exactly",
            published_arithmetic);
  criterion("record integrity: crc value, shard roundtrip, bit flips",
            record_integrity, 20000);
  criterion("polygon rasterization matches the per-pixel oracle",
            rasterization_oracle, 10000);
  criterion("damage pipeline: 4.0%, 7.0% and unowned fixtures",
            damage_pipeline);
  criterion("pack/augment/evaluate byte-identical across seeds and workers",
            cli_determinism);

  const auto total = std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::steady_clock::now() - suite_start)
                         .count();
  criterion("full suite completes in under 2 minutes",
            [&] { return total < 120; });

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
