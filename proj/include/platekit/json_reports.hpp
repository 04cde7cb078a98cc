#pragma once

#include <string>

#include "json.hpp"
#include "platekit/annotation_io.hpp"
#include "platekit/detection_metrics.hpp"
#include "platekit/pseudo_label.hpp"
#include "platekit/recognition_metrics.hpp"

namespace platekit {

inline nlohmann::json to_json(const DatasetIndex& index) {
  nlohmann::json j;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : index.entries) {
    j["entries"].push_back({{"image_id", e.image_id},
                            {"image_path", e.image_path.generic_string()},
                            {"label_path", e.label_path.generic_string()},
                            {"width", e.width},
                            {"height", e.height},
                            {"has_label", e.has_label}});
  }
  j["skipped"] = nlohmann::json::array();
  for (const auto& s : index.skipped) {
    j["skipped"].push_back({{"path", s.path}, {"reason", s.reason}});
  }
  return j;
}

inline nlohmann::json to_json(const ImageCounts& c) {
  return {{"input", c.input},
          {"dropped_low_confidence", c.dropped_low_confidence},
          {"dropped_suppressed", c.dropped_suppressed},
          {"dropped_truncated", c.dropped_truncated},
          {"dropped_conflict_with_human", c.dropped_conflict_with_human},
          {"retained", c.retained}};
}

inline nlohmann::json to_json(const PseudoLabelReport& report) {
  nlohmann::json j;
  j["totals"] = to_json(report.totals);
  j["images"] = nlohmann::json::array();
  for (const auto& img : report.images) {
    nlohmann::json e = to_json(img.counts);
    e["image_id"] = img.image_id;
    e["human_labels"] = img.human_labels;
    j["images"].push_back(std::move(e));
  }
  j["skipped"] = nlohmann::json::array();
  for (const auto& s : report.skipped) {
    j["skipped"].push_back({{"image_id", s.image_id}, {"reason", s.reason}});
  }
  return j;
}

inline nlohmann::json to_json(const ApReport& report) {
  nlohmann::json j;
  j["thresholds"] = report.thresholds;
  j["ap"] = report.ap;
  j["ap_50_95"] = report.ap_50_95;
  j["recall_at_0_50"] = report.recall_at_50;
  j["total_ground_truths"] = report.total_ground_truths;
  j["total_detections"] = report.total_detections;
  j["issues"] = report.issues;
  return j;
}

inline nlohmann::json to_json(const RecognitionReport& report) {
  nlohmann::json j;
  j["cer"] = report.cer;
  j["char_recall"] = report.char_recall;
  j["exact_match_rate"] = report.exact_match_rate;
  j["total_truth_chars"] = report.total_truth_chars;
  j["total_matches"] = report.total_matches;
  j["total_edits"] = report.total_edits;
  j["plate_count"] = report.plate_count;
  j["plates"] = nlohmann::json::array();
  for (const auto& p : report.plates) {
    j["plates"].push_back({{"id", p.id},
                           {"truth", p.truth},
                           {"pred", p.pred},
                           {"distance", p.distance}});
  }
  return j;
}

}  // namespace platekit
