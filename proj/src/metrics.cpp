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

#include "canopy/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "canopy/error.hpp"

namespace canopy {

using nlohmann::json;

std::vector<double> iou_threshold_sweep() {
  std::vector<double> thresholds;
  for (int i = 0; i <= 9; ++i) thresholds.push_back((50 + 5 * i) / 100.0);
  return thresholds;
}

namespace {

/// Indices of `dets` in descending score order, ties by input order.
std::vector<std::size_t> rank_by_score(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].score > dets[b].score;
                   });
  return order;
}

}  // namespace

MatchResult match(std::span<const LabeledBox> gts,
                  std::span<const Detection> dets, double iou_threshold) {
  MatchResult result;
  std::vector<bool> gt_taken(gts.size(), false);
  for (const std::size_t det_index : rank_by_score(dets)) {
    double best_iou = 0.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) continue;
      const double overlap = iou(dets[det_index].box, gts[g].box);
      if (overlap > best_iou) {
        best_iou = overlap;
        best_gt = g;
      }
    }
    if (best_gt != gts.size() && best_iou >= iou_threshold) {
      gt_taken[best_gt] = true;
      result.matches.push_back(Match{det_index, best_gt, best_iou});
      ++result.tp;
    } else {
      ++result.fp;
    }
  }
  result.fn = static_cast<std::int64_t>(gts.size()) - result.tp;
  return result;
}

double precision(const MatchResult& m) {
  const auto denom = m.tp + m.fp;
  return denom == 0 ? 0.0 : double(m.tp) / double(denom);
}

double recall(const MatchResult& m) {
  const auto denom = m.tp + m.fn;
  return denom == 0 ? 0.0 : double(m.tp) / double(denom);
}

PRCurve pr_curve(std::span<const GroundTruth> gts,
                 std::span<const Detection> dets, double iou_threshold) {
  // Group ground truth by image; matching never crosses images.
  std::unordered_map<std::int64_t, std::vector<std::size_t>> gt_by_image;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    gt_by_image[gts[g].image_id].push_back(g);
  }
  std::vector<bool> gt_taken(gts.size(), false);

  PRCurve curve;
  const double total_gt = static_cast<double>(gts.size());
  std::int64_t tp = 0;
  std::int64_t seen = 0;
  for (const std::size_t det_index : rank_by_score(dets)) {
    const Detection& det = dets[det_index];
    double best_iou = 0.0;
    std::size_t best_gt = gts.size();
    if (const auto it = gt_by_image.find(det.image_id);
        it != gt_by_image.end()) {
      for (const std::size_t g : it->second) {
        if (gt_taken[g]) continue;
        const double overlap = iou(det.box, gts[g].box);
        if (overlap > best_iou) {
          best_iou = overlap;
          best_gt = g;
        }
      }
    }
    if (best_gt != gts.size() && best_iou >= iou_threshold) {
      gt_taken[best_gt] = true;
      ++tp;
    }
    ++seen;
    curve.push_back(PRPoint{total_gt == 0.0 ? 0.0 : double(tp) / total_gt,
                            double(tp) / double(seen), det.score});
  }
  return curve;
}

namespace {

/// Mean of interpolated precision at recalls 0.00, 0.01, ..., 1.00, where
/// the interpolated precision at r is the best precision achieved at any
/// recall >= r.
double interpolate_101(const PRCurve& curve) {
  if (curve.empty()) return 0.0;
  std::vector<double> best_from(curve.size() + 1, 0.0);
  for (std::size_t i = curve.size(); i-- > 0;) {
    best_from[i] = std::max(curve[i].precision, best_from[i + 1]);
  }
  double sum = 0.0;
  std::size_t k = 0;
  for (int i = 0; i <= 100; ++i) {
    const double r = double(i) / 100.0;
    while (k < curve.size() && curve[k].recall < r) ++k;
    sum += (k < curve.size()) ? best_from[k] : 0.0;
  }
  return sum / 101.0;
}

}  // namespace

double average_precision(std::span<const GroundTruth> gts,
                         std::span<const Detection> dets,
                         double iou_threshold) {
  if (gts.empty()) return 0.0;
  return interpolate_101(pr_curve(gts, dets, iou_threshold));
}

EvalReport map_range(const DatasetIndex& index,
                     std::span<const Detection> dets) {
  std::unordered_set<std::int64_t> image_ids;
  for (const auto& image : index.images) image_ids.insert(image.image_id);
  for (const auto& det : dets) {
    if (!image_ids.count(det.image_id)) {
      throw Error("detection references unknown image id " +
                  std::to_string(det.image_id));
    }
    if (!index.categories.has_id(det.category_id)) {
      throw Error("detection references unknown category id " +
                  std::to_string(det.category_id));
    }
  }

  const int num_categories = index.categories.size();
  std::vector<std::vector<GroundTruth>> gts_by_category(num_categories + 1);
  for (const auto& image : index.images) {
    for (const auto& lb : image.boxes) {
      gts_by_category[lb.category_id].push_back(
          GroundTruth{image.image_id, lb.category_id, lb.box});
    }
  }
  std::vector<std::vector<Detection>> dets_by_category(num_categories + 1);
  for (const auto& det : dets) dets_by_category[det.category_id].push_back(det);

  const std::vector<double> thresholds = iou_threshold_sweep();
  EvalReport report;
  std::vector<std::pair<std::int64_t, std::int64_t>> tp_fp_50;
  for (int c = 1; c <= num_categories; ++c) {
    const auto& cat_gts = gts_by_category[c];
    const auto& cat_dets = dets_by_category[c];
    CategoryEval eval;
    eval.category_id = c;
    eval.name = index.categories.name_of(c);
    eval.gt_count = static_cast<std::int64_t>(cat_gts.size());
    eval.det_count = static_cast<std::int64_t>(cat_dets.size());

    double recall_sum = 0.0;
    for (const double threshold : thresholds) {
      const PRCurve curve = pr_curve(cat_gts, cat_dets, threshold);
      eval.ap_per_threshold.push_back(
          cat_gts.empty() ? 0.0 : interpolate_101(curve));
      const double final_recall =
          (cat_gts.empty() || curve.empty()) ? 0.0 : curve.back().recall;
      recall_sum += final_recall;
      if (threshold == 0.50) {
        const auto tp = static_cast<std::int64_t>(
            std::llround(final_recall * double(cat_gts.size())));
        eval.tp_50 = tp;
        eval.fp_50 = eval.det_count - tp;
        eval.fn_50 = eval.gt_count - tp;
      }
    }
    eval.ap_mean = std::accumulate(eval.ap_per_threshold.begin(),
                                   eval.ap_per_threshold.end(), 0.0) /
                   double(thresholds.size());
    eval.ap_50 = eval.ap_per_threshold.front();
    eval.recall_mean = recall_sum / double(thresholds.size());
    tp_fp_50.emplace_back(eval.tp_50, eval.fp_50);
    report.categories.push_back(std::move(eval));
  }

  const double k = double(std::max(1, num_categories));
  for (const auto& eval : report.categories) {
    report.map_5095 += eval.ap_mean / k;
    report.ap_50 += eval.ap_50 / k;
    report.ar_5095 += eval.recall_mean / k;
  }
  report.simple_map = num_categories == 0 ? 0.0 : simple_map(tp_fp_50);
  return report;
}

double simple_map(
    std::span<const std::pair<std::int64_t, std::int64_t>> per_class_tp_fp) {
  if (per_class_tp_fp.empty()) throw Error("simple_map: empty class list");
  double sum = 0.0;
  for (const auto& [tp, fp] : per_class_tp_fp) {
    const auto denom = tp + fp;
    sum += denom == 0 ? 0.0 : double(tp) / double(denom);
  }
  return sum / double(per_class_tp_fp.size());
}

std::vector<Detection> nms(std::span<const Detection> dets,
                           double iou_threshold, std::size_t max_kept) {
  for (const auto& det : dets) {
    if (det.image_id != dets.front().image_id) {
      throw Error("nms: detections span multiple images");
    }
  }
  std::vector<Detection> kept;
  for (const std::size_t det_index : rank_by_score(dets)) {
    const Detection& candidate = dets[det_index];
    bool suppressed = false;
    for (const Detection& keeper : kept) {
      if (keeper.category_id == candidate.category_id &&
          iou(keeper.box, candidate.box) >= iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(candidate);
      if (kept.size() == max_kept) break;
    }
  }
  return kept;
}

std::vector<Detection> parse_detections(const std::string& jsonl_text) {
  std::vector<Detection> dets;
  std::istringstream in(jsonl_text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    try {
      const json entry = json::parse(line);
      const auto& bbox = entry.at("bbox");
      const double score = entry.at("score").get<double>();
      if (!(score >= 0.0 && score <= 1.0)) {
        throw Error("score outside [0, 1]");
      }
      dets.push_back(Detection{
          entry.at("image_id").get<std::int64_t>(),
          entry.at("category_id").get<int>(), score,
          BBox(bbox.at(0).get<double>(), bbox.at(1).get<double>(),
               bbox.at(2).get<double>(), bbox.at(3).get<double>())});
    } catch (const std::exception& e) {
      throw ParseError("detections line " + std::to_string(line_number) +
                       ": " + e.what());
    }
  }
  return dets;
}

std::string write_detections(std::span<const Detection> dets) {
  std::string out;
  for (const auto& det : dets) {
    json entry = {{"image_id", det.image_id},
                  {"category_id", det.category_id},
                  {"score", det.score},
                  {"bbox", json::array({det.box.xmin(), det.box.ymin(),
                                        det.box.xmax(), det.box.ymax()})}};
    out += entry.dump();
    out += '\n';
  }
  return out;
}

std::string write_report_json(const EvalReport& report) {
  json root;
  root["mAP_50_95"] = report.map_5095;
  root["AP_50"] = report.ap_50;
  root["AR_50_95"] = report.ar_5095;
  root["simple_mAP"] = report.simple_map;
  root["iou_thresholds"] = iou_threshold_sweep();
  root["categories"] = json::array();
  for (const auto& eval : report.categories) {
    root["categories"].push_back({{"id", eval.category_id},
                                  {"name", eval.name},
                                  {"ap_per_threshold", eval.ap_per_threshold},
                                  {"ap_mean", eval.ap_mean},
                                  {"ap_50", eval.ap_50},
                                  {"recall_mean", eval.recall_mean},
                                  {"gt_count", eval.gt_count},
                                  {"det_count", eval.det_count},
                                  {"tp_50", eval.tp_50},
                                  {"fp_50", eval.fp_50},
                                  {"fn_50", eval.fn_50}});
  }
  return root.dump(2) + "\n";
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %-36s %-32s %s\n", "Category",
                "Average Precision(IOU=0.50:0.95)",
                "Average Recall(IOU=0.50:0.95)", "mAP");
  out << line;
  out << std::string(100, '-') << "\n";
  for (const auto& eval : report.categories) {
    std::snprintf(line, sizeof(line), "%-24s %-36.4f %-32.4f %.4f\n",
                  eval.name.c_str(), eval.ap_mean, eval.recall_mean,
                  eval.ap_mean);
    out << line;
  }
  out << std::string(100, '-') << "\n";
  std::snprintf(line, sizeof(line), "%-24s %-36.4f %-32.4f %.4f\n", "all",
                report.map_5095, report.ar_5095, report.map_5095);
  out << line;
  return out.str();
}

}  // namespace canopy
