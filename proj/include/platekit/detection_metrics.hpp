#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "platekit/annotation_io.hpp"
#include "platekit/errors.hpp"
#include "platekit/geometry.hpp"

namespace platekit {

inline constexpr std::array<double, 10> kCocoThresholds = {
    0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};

struct ScoredBox {
  BoxPixel box;
  double confidence = 0.0;
};

/// Verdict for one detection at one IoU threshold.
struct DetectionOutcome {
  std::string image_id;
  double confidence = 0.0;
  bool true_positive = false;
  std::optional<std::size_t> matched_gt;
  std::size_t input_order = 0;  // position in the detection file
};

/// Greedy matching: detections in descending confidence (ties keep file
/// order) each claim the unmatched ground truth of maximal IoU, provided
/// that IoU reaches the threshold. IoU ties go to the lowest gt index.
inline std::vector<DetectionOutcome> match_image(
    std::span<const ScoredBox> dets, std::span<const BoxPixel> gts,
    double iou_threshold, std::string_view image_id = "") {
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].confidence > dets[b].confidence;
                   });

  std::vector<bool> gt_matched(gts.size(), false);
  std::vector<DetectionOutcome> outcomes(dets.size());
  for (const std::size_t d : order) {
    double best_iou = 0.0;
    std::optional<std::size_t> best_gt;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_matched[g]) continue;
      const double overlap = iou(dets[d].box, gts[g]);
      if (overlap > best_iou) {
        best_iou = overlap;
        best_gt = g;
      }
    }
    DetectionOutcome& out = outcomes[d];
    out.image_id = std::string(image_id);
    out.confidence = dets[d].confidence;
    out.input_order = d;
    if (best_gt && best_iou >= iou_threshold) {
      out.true_positive = true;
      out.matched_gt = best_gt;
      gt_matched[*best_gt] = true;
    }
  }
  return outcomes;
}

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;

  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

/// One point per detection along the global confidence sweep; recall is
/// non-decreasing.
struct PrCurve {
  std::vector<PrPoint> points;
};

/// Pools outcomes across images, sorts by descending confidence (ties by
/// image_id then file order), and emits cumulative precision/recall.
inline PrCurve precision_recall(std::vector<DetectionOutcome> outcomes,
                                std::size_t total_gt) {
  if (total_gt == 0) {
    throw EvalError("recall undefined: no ground-truth boxes");
  }
  std::sort(outcomes.begin(), outcomes.end(),
            [](const DetectionOutcome& a, const DetectionOutcome& b) {
              if (a.confidence != b.confidence)
                return a.confidence > b.confidence;
              if (a.image_id != b.image_id) return a.image_id < b.image_id;
              return a.input_order < b.input_order;
            });
  PrCurve curve;
  curve.points.reserve(outcomes.size());
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (const auto& o : outcomes) {
    o.true_positive ? ++tp : ++fp;
    curve.points.push_back(
        PrPoint{static_cast<double>(tp) / static_cast<double>(total_gt),
                static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return curve;
}

/// 101-point interpolated average precision: the mean over recall levels
/// 0.00, 0.01, ..., 1.00 of the best precision at or beyond each level.
inline double average_precision(const PrCurve& curve) {
  const auto& pts = curve.points;
  if (pts.empty()) return 0.0;

  // Best precision among points with recall >= pts[i].recall.
  std::vector<double> best_from(pts.size());
  double running = 0.0;
  for (std::size_t i = pts.size(); i-- > 0;) {
    running = std::max(running, pts[i].precision);
    best_from[i] = running;
  }

  double sum = 0.0;
  for (int level = 0; level <= 100; ++level) {
    const double r = static_cast<double>(level) / 100.0;
    const auto it = std::lower_bound(
        pts.begin(), pts.end(), r,
        [](const PrPoint& p, double value) { return p.recall < value; });
    if (it != pts.end()) {
      sum += best_from[static_cast<std::size_t>(it - pts.begin())];
    }
  }
  return sum / 101.0;
}

struct ApReport {
  std::vector<double> thresholds;
  std::vector<double> ap;            // one per threshold
  double ap_50_95 = 0.0;             // mean over the thresholds above
  double recall_at_50 = 0.0;         // detection recall at IoU 0.50
  std::size_t total_ground_truths = 0;
  std::size_t total_detections = 0;
  std::vector<std::string> issues;   // per-image problems, evaluation continued
};

namespace detail {

struct EvalImage {
  std::string image_id;
  // Per category: detections in file order and ground-truth boxes.
  std::map<int, std::vector<ScoredBox>> dets;
  std::map<int, std::vector<BoxPixel>> gts;
};

inline std::vector<DetectionOutcome> match_all(
    const std::vector<EvalImage>& images, double threshold) {
  std::vector<DetectionOutcome> pooled;
  for (const auto& img : images) {
    for (const auto& [category, dets] : img.dets) {
      const auto git = img.gts.find(category);
      static const std::vector<BoxPixel> kNone;
      const auto& gts = git == img.gts.end() ? kNone : git->second;
      auto outcomes = match_image(dets, gts, threshold, img.image_id);
      pooled.insert(pooled.end(), outcomes.begin(), outcomes.end());
    }
  }
  return pooled;
}

}  // namespace detail

/// Runs the full detection evaluation over an indexed dataset: per-image
/// greedy matching at each threshold, a pooled precision/recall sweep, and
/// the mean AP across thresholds. Detections live in
/// `detections_root/<image_id>.txt`; ground truth comes from
/// `labels_root/<image_id>.txt` when given, else from the index.
inline ApReport evaluate_detection(
    const DatasetIndex& index, const std::filesystem::path& detections_root,
    const std::optional<std::filesystem::path>& labels_root = {},
    std::span<const double> thresholds = kCocoThresholds) {
  namespace fs = std::filesystem;
  ApReport report;
  report.thresholds.assign(thresholds.begin(), thresholds.end());

  std::vector<detail::EvalImage> images;
  for (const auto& entry : index.entries) {
    detail::EvalImage img;
    img.image_id = entry.image_id;

    fs::path label_path = entry.label_path;
    bool have_labels = entry.has_label;
    if (labels_root) {
      label_path = *labels_root / (entry.image_id + ".txt");
      have_labels = fs::exists(label_path);
    }
    if (have_labels) {
      try {
        for (const auto& r : parse_label_file(read_file(label_path))) {
          img.gts[r.category_id].push_back(
              to_pixel(r.box, entry.width, entry.height));
          ++report.total_ground_truths;
        }
      } catch (const Error& e) {
        report.issues.push_back(entry.image_id + ": " + e.what());
      }
    } else {
      report.issues.push_back(entry.image_id + ": no ground-truth label file");
    }

    const fs::path det_path = detections_root / (entry.image_id + ".txt");
    if (fs::exists(det_path)) {
      try {
        for (const auto& r : parse_detection_file(read_file(det_path))) {
          img.dets[r.category_id].push_back(ScoredBox{
              to_pixel(r.box, entry.width, entry.height), r.confidence});
          ++report.total_detections;
        }
      } catch (const Error& e) {
        report.issues.push_back(entry.image_id + ": " + e.what());
      }
    } else {
      report.issues.push_back(entry.image_id + ": no detection file");
    }
    images.push_back(std::move(img));
  }

  if (report.total_ground_truths == 0) {
    throw EvalError("recall undefined: no ground-truth boxes");
  }

  double ap_sum = 0.0;
  for (const double t : thresholds) {
    const auto pooled = detail::match_all(images, t);
    const double ap = average_precision(
        precision_recall(pooled, report.total_ground_truths));
    report.ap.push_back(ap);
    ap_sum += ap;
  }
  report.ap_50_95 =
      thresholds.empty() ? 0.0 : ap_sum / static_cast<double>(thresholds.size());

  std::size_t tp50 = 0;
  for (const auto& o : detail::match_all(images, 0.50)) {
    if (o.true_positive) ++tp50;
  }
  report.recall_at_50 = static_cast<double>(tp50) /
                        static_cast<double>(report.total_ground_truths);
  return report;
}

}  // namespace platekit
