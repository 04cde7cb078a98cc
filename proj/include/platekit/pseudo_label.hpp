#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "platekit/annotation_io.hpp"
#include "platekit/errors.hpp"
#include "platekit/geometry.hpp"

namespace platekit {

/// Quality gate applied to raw detector output before it becomes a label.
struct FilterPolicy {
  double min_confidence = 0.35;
  double suppression_iou = 0.5;
  std::optional<std::size_t> max_per_image;  // unlimited when absent

  bool valid() const {
    return min_confidence >= 0.0 && min_confidence <= 1.0 &&
           suppression_iou > 0.0 && suppression_iou <= 1.0;
  }
};

struct MergePolicy {
  double human_precedence_iou = 0.5;

  bool valid() const {
    return human_precedence_iou > 0.0 && human_precedence_iou <= 1.0;
  }
};

/// Where every input detection of one image ended up. Conservation holds:
/// input == retained + sum of the dropped_* buckets.
struct ImageCounts {
  std::uint64_t input = 0;
  std::uint64_t dropped_low_confidence = 0;
  std::uint64_t dropped_suppressed = 0;
  std::uint64_t dropped_truncated = 0;
  std::uint64_t dropped_conflict_with_human = 0;
  std::uint64_t retained = 0;

  std::uint64_t dropped_total() const {
    return dropped_low_confidence + dropped_suppressed + dropped_truncated +
           dropped_conflict_with_human;
  }

  ImageCounts& operator+=(const ImageCounts& o) {
    input += o.input;
    dropped_low_confidence += o.dropped_low_confidence;
    dropped_suppressed += o.dropped_suppressed;
    dropped_truncated += o.dropped_truncated;
    dropped_conflict_with_human += o.dropped_conflict_with_human;
    retained += o.retained;
    return *this;
  }
};

/// Confidence gate, then greedy same-category suppression in descending
/// confidence (ties keep file order), then the per-image cap. Survivors
/// come back as plain labels in confidence order.
inline std::vector<LabelRecord> filter_detections(
    std::span<const DetectionRecord> dets, const FilterPolicy& policy,
    int width, int height, ImageCounts* counts = nullptr) {
  ImageCounts local;
  local.input = dets.size();

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].confidence < policy.min_confidence) {
      ++local.dropped_low_confidence;
    } else {
      order.push_back(i);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].confidence > dets[b].confidence;
                   });

  std::vector<std::size_t> kept;
  std::vector<BoxPixel> kept_boxes;
  for (const std::size_t i : order) {
    const BoxPixel candidate = to_pixel(dets[i].box, width, height);
    bool suppressed = false;
    for (std::size_t k = 0; k < kept.size(); ++k) {
      if (dets[kept[k]].category_id != dets[i].category_id) continue;
      if (iou(candidate, kept_boxes[k]) >= policy.suppression_iou) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) {
      ++local.dropped_suppressed;
    } else {
      kept.push_back(i);
      kept_boxes.push_back(candidate);
    }
  }

  if (policy.max_per_image && kept.size() > *policy.max_per_image) {
    local.dropped_truncated = kept.size() - *policy.max_per_image;
    kept.resize(*policy.max_per_image);
  }

  std::vector<LabelRecord> out;
  out.reserve(kept.size());
  for (const std::size_t i : kept) {
    out.push_back(LabelRecord{dets[i].category_id, dets[i].box});
  }
  local.retained = out.size();
  if (counts) *counts = local;
  return out;
}

/// Human labels pass through verbatim and lead the output; a pseudo label is
/// dropped when it overlaps a same-category human label at or above the
/// precedence IoU. Surviving pseudo labels keep their input order.
inline std::vector<LabelRecord> merge_labels(
    std::span<const LabelRecord> human, std::span<const LabelRecord> pseudo,
    const MergePolicy& policy, int width, int height,
    std::uint64_t* dropped_conflicts = nullptr) {
  std::vector<LabelRecord> out(human.begin(), human.end());
  std::vector<BoxPixel> human_boxes;
  human_boxes.reserve(human.size());
  for (const auto& h : human) {
    human_boxes.push_back(to_pixel(h.box, width, height));
  }

  std::uint64_t conflicts = 0;
  for (const auto& p : pseudo) {
    const BoxPixel candidate = to_pixel(p.box, width, height);
    bool conflict = false;
    for (std::size_t k = 0; k < human.size(); ++k) {
      if (human[k].category_id != p.category_id) continue;
      if (iou(candidate, human_boxes[k]) >= policy.human_precedence_iou) {
        conflict = true;
        break;
      }
    }
    if (conflict) {
      ++conflicts;
    } else {
      out.push_back(p);
    }
  }
  if (dropped_conflicts) *dropped_conflicts = conflicts;
  return out;
}

struct PseudoLabelReport {
  struct ImageEntry {
    std::string image_id;
    ImageCounts counts;
    std::uint64_t human_labels = 0;
  };
  struct SkippedImage {
    std::string image_id;
    std::string reason;
  };

  std::vector<ImageEntry> images;
  std::vector<SkippedImage> skipped;
  ImageCounts totals;
};

/// Full pass over an indexed dataset: read each image's detection file,
/// filter, merge with its human labels (when `use_human_labels`), and write
/// one merged label file per image under `output_root`. An unlabeled image
/// with no detection file is skipped and recorded.
inline PseudoLabelReport run_pseudo_label_pass(
    const DatasetIndex& index, const std::filesystem::path& detections_root,
    const std::filesystem::path& output_root, const FilterPolicy& filter,
    const MergePolicy& merge, bool use_human_labels = true) {
  namespace fs = std::filesystem;
  if (!filter.valid()) throw Error("filter policy out of range");
  if (!merge.valid()) throw Error("merge policy out of range");

  PseudoLabelReport report;
  for (const auto& entry : index.entries) {
    std::vector<LabelRecord> human;
    if (use_human_labels && entry.has_label) {
      try {
        human = parse_label_file(read_file(entry.label_path));
      } catch (const Error& e) {
        report.skipped.push_back({entry.image_id,
                                  std::string("bad label file: ") + e.what()});
        continue;
      }
    }

    const fs::path det_path = detections_root / (entry.image_id + ".txt");
    std::vector<DetectionRecord> dets;
    if (fs::exists(det_path)) {
      try {
        dets = parse_detection_file(read_file(det_path));
      } catch (const Error& e) {
        report.skipped.push_back(
            {entry.image_id, std::string("bad detection file: ") + e.what()});
        continue;
      }
    } else if (human.empty()) {
      report.skipped.push_back({entry.image_id, "missing detection file"});
      continue;
    }

    ImageCounts counts;
    const auto pseudo =
        filter_detections(dets, filter, entry.width, entry.height, &counts);
    std::uint64_t conflicts = 0;
    const auto merged = merge_labels(human, pseudo, merge, entry.width,
                                     entry.height, &conflicts);
    counts.dropped_conflict_with_human = conflicts;
    counts.retained -= conflicts;

    write_file(output_root / (entry.image_id + ".txt"),
               write_label_file(merged));
    report.images.push_back({entry.image_id, counts, human.size()});
    report.totals += counts;
  }
  return report;
}

}  // namespace platekit
