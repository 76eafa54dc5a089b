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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "canopy/annotation.hpp"
#include "canopy/geometry.hpp"

namespace canopy {

struct Detection {
  std::int64_t image_id = 0;
  int category_id = 0;
  double score = 0.0;  // finite, in [0, 1]
  BBox box;

  bool operator==(const Detection&) const = default;
};

/// Ground-truth box tagged with its image, the shape the evaluator works on.
struct GroundTruth {
  std::int64_t image_id = 0;
  int category_id = 0;
  BBox box;
};

struct Match {
  std::size_t detection_index = 0;
  std::size_t ground_truth_index = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::vector<Match> matches;
};

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  double score_threshold = 0.0;
};

using PRCurve = std::vector<PRPoint>;

struct CategoryEval {
  int category_id = 0;
  std::string name;
  /// AP at each IOU threshold 0.50, 0.55, ..., 0.95.
  std::vector<double> ap_per_threshold;
  double ap_mean = 0.0;   // mean over the 10 thresholds
  double ap_50 = 0.0;
  double recall_mean = 0.0;  // mean final recall over the 10 thresholds
  std::int64_t gt_count = 0;
  std::int64_t det_count = 0;
  // Matching counts at IOU 0.50 over the full detection list; these feed
  // the simplified tp/(tp+fp) mean.
  std::int64_t tp_50 = 0;
  std::int64_t fp_50 = 0;
  std::int64_t fn_50 = 0;
};

struct EvalReport {
  std::vector<CategoryEval> categories;
  double map_5095 = 0.0;   // mean over categories of per-category mean AP
  double ap_50 = 0.0;      // mean over categories of AP at IOU 0.50
  double ar_5095 = 0.0;    // mean over categories and thresholds
  double simple_map = 0.0; // mean over categories of tp/(tp+fp) at IOU 0.50
};

/// The 10 IOU thresholds 0.50:0.05:0.95.
std::vector<double> iou_threshold_sweep();

/// Greedy matching for one image and one category: detections in
/// descending-score order (ties by input order) each claim the unmatched
/// ground truth of highest IOU when that IOU >= iou_threshold.
MatchResult match(std::span<const LabeledBox> gts,
                  std::span<const Detection> dets, double iou_threshold);

double precision(const MatchResult& m);
double recall(const MatchResult& m);

/// 101-point interpolated average precision for one category across
/// images. A category with no ground truth scores 0.
double average_precision(std::span<const GroundTruth> gts,
                         std::span<const Detection> dets,
                         double iou_threshold);

/// The PR points behind average_precision, one per detection in rank order.
PRCurve pr_curve(std::span<const GroundTruth> gts,
                 std::span<const Detection> dets, double iou_threshold);

/// Full evaluation over the IOU sweep. Throws Error when a detection
/// references an unknown image or category id.
EvalReport map_range(const DatasetIndex& index,
                     std::span<const Detection> dets);

/// Mean over classes of tp/(tp+fp); zero-denominator classes contribute 0.
/// Throws Error on an empty class list.
double simple_map(
    std::span<const std::pair<std::int64_t, std::int64_t>> per_class_tp_fp);

/// Class-aware greedy non-max suppression for one image; keeps at most
/// max_kept boxes. Throws Error when detections span multiple images.
std::vector<Detection> nms(std::span<const Detection> dets,
                           double iou_threshold, std::size_t max_kept = 200);

/// Detections as JSON lines:
/// {image_id, category_id, score, bbox:[xmin,ymin,xmax,ymax]}.
std::vector<Detection> parse_detections(const std::string& jsonl_text);
std::string write_detections(std::span<const Detection> dets);

std::string write_report_json(const EvalReport& report);
/// Plain-text table with the AP / AR / mAP columns.
std::string format_report_table(const EvalReport& report);

}  // namespace canopy
