// Command-line front end for the plate dataset and evaluation toolkit.
//
// Exit codes: 0 success, 1 validation/parse findings, 2 usage error,
// 3 I/O failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "platekit/annotation_io.hpp"
#include "platekit/detection_metrics.hpp"
#include "platekit/errors.hpp"
#include "platekit/fsutil.hpp"
#include "platekit/json_reports.hpp"
#include "platekit/pseudo_label.hpp"
#include "platekit/recognition_metrics.hpp"
#include "platekit/synth_plate.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFindings = 1;
constexpr int kUsage = 2;
constexpr int kIoFailure = 3;

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

void write_json_report(const fs::path& path, const nlohmann::json& j) {
  platekit::write_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- validate

struct ValidateOpts {
  std::string root;
  int max_category = 36;
  std::string report = "validate_report.json";
  std::string image_ext = ".ppm";
  std::string label_subdir;
};

struct Finding {
  std::string file;
  int line = 0;
  std::string message;
};

void validate_text(const std::string& text, const std::string& file,
                   int max_category, std::vector<Finding>& findings) {
  platekit::detail::for_each_line(text, [&](std::string_view line,
                                            int line_no) {
    const auto fields = platekit::detail::split_fields(line);
    if (fields.empty()) return;
    try {
      int category = 0;
      if (fields.size() == 5) {
        const std::string one(line);
        category = platekit::parse_label_file(one).at(0).category_id;
      } else if (fields.size() == 6) {
        const std::string one(line);
        category = platekit::parse_detection_file(one).at(0).category_id;
      } else {
        findings.push_back({file, line_no,
                            "expected 5 or 6 fields, got " +
                                std::to_string(fields.size())});
        return;
      }
      if (category > max_category) {
        findings.push_back({file, line_no,
                            "category " + std::to_string(category) +
                                " exceeds --max-category " +
                                std::to_string(max_category)});
      }
    } catch (const platekit::ParseError& e) {
      // Re-anchor the single-line parse to the real line number.
      std::string message = e.what();
      if (const auto cut = message.rfind(" (line "); cut != std::string::npos) {
        message.resize(cut);
      }
      findings.push_back({file, line_no, message});
    }
  });
}

int run_validate(const ValidateOpts& opts) {
  const fs::path root(opts.root);
  if (!fs::exists(root) || !fs::is_directory(root)) {
    std::cerr << "validate: cannot read " << opts.root << "\n";
    return kIoFailure;
  }

  std::vector<fs::path> files;
  for (const auto& item : fs::recursive_directory_iterator(root)) {
    if (item.is_regular_file() && item.path().extension() == ".txt") {
      files.push_back(item.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<Finding> findings;
  for (const auto& file : files) {
    validate_text(platekit::read_file(file), file.generic_string(),
                  opts.max_category, findings);
  }

  nlohmann::json j;
  j["files_checked"] = files.size();
  j["findings"] = nlohmann::json::array();
  for (const auto& f : findings) {
    j["findings"].push_back(
        {{"file", f.file}, {"line", f.line}, {"message", f.message}});
  }
  const auto index =
      platekit::build_index(root, opts.image_ext, opts.label_subdir);
  j["index"] = platekit::to_json(index);
  write_json_report(opts.report, j);
  std::cout << "checked " << files.size() << " files, " << findings.size()
            << " findings, " << index.entries.size() << " images indexed ("
            << index.skipped.size() << " skipped; report: " << opts.report
            << ")\n";
  return findings.empty() && index.skipped.empty() ? kOk : kFindings;
}

// ------------------------------------------------------------ filter/merge

struct PseudoOpts {
  std::string images;
  std::string detections;
  std::string out;
  std::string report;
  std::string image_ext = ".ppm";
  std::string label_subdir;
  double min_confidence = 0.35;
  double suppression_iou = 0.5;
  double precedence_iou = 0.5;
  std::optional<std::size_t> max_per_image;
};

int run_pseudo(const PseudoOpts& opts, bool use_human) {
  const auto index =
      platekit::build_index(opts.images, opts.image_ext, opts.label_subdir);
  platekit::FilterPolicy filter;
  filter.min_confidence = opts.min_confidence;
  filter.suppression_iou = opts.suppression_iou;
  filter.max_per_image = opts.max_per_image;
  platekit::MergePolicy merge;
  merge.human_precedence_iou = opts.precedence_iou;
  if (!filter.valid() || !merge.valid()) {
    std::cerr << "policy flags out of range\n";
    return kUsage;
  }

  const auto report = platekit::run_pseudo_label_pass(
      index, opts.detections, opts.out, filter, merge, use_human);

  const fs::path report_path =
      opts.report.empty() ? fs::path(opts.out) / "pseudo_label_report.json"
                          : fs::path(opts.report);
  write_json_report(report_path, platekit::to_json(report));

  const auto& t = report.totals;
  std::cout << "images " << report.images.size() << ", detections " << t.input
            << ", retained " << t.retained << " (low-confidence "
            << t.dropped_low_confidence << ", suppressed "
            << t.dropped_suppressed << ", truncated " << t.dropped_truncated
            << ", human-conflict " << t.dropped_conflict_with_human
            << "), skipped " << report.skipped.size() << "\n";
  return report.skipped.empty() && index.skipped.empty() ? kOk : kFindings;
}

// ----------------------------------------------------------------- eval-det

struct EvalDetOpts {
  std::string images;
  std::string detections;
  std::string labels;
  std::string report = "ap_report.json";
  std::string image_ext = ".ppm";
  std::string label_subdir;
  std::vector<double> thresholds;
};

int run_eval_det(const EvalDetOpts& opts) {
  const auto index =
      platekit::build_index(opts.images, opts.image_ext, opts.label_subdir);
  std::optional<fs::path> labels_root;
  if (!opts.labels.empty()) labels_root = fs::path(opts.labels);

  std::vector<double> thresholds(platekit::kCocoThresholds.begin(),
                                 platekit::kCocoThresholds.end());
  if (!opts.thresholds.empty()) thresholds = opts.thresholds;

  platekit::ApReport report;
  try {
    report = platekit::evaluate_detection(index, opts.detections, labels_root,
                                          thresholds);
  } catch (const platekit::EvalError& e) {
    std::cerr << "eval-det: " << e.what() << "\n";
    return kFindings;
  }

  write_json_report(opts.report, platekit::to_json(report));
  for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
    std::cout << "AP@" << fixed3(report.thresholds[i]).substr(0, 4) << "  "
              << fixed3(report.ap[i]) << "\n";
  }
  std::cout << "AP50:95      " << fixed3(report.ap_50_95) << "\n"
            << "recall@0.50  " << fixed3(report.recall_at_50) << "\n"
            << "ground truths " << report.total_ground_truths
            << ", detections " << report.total_detections << ", issues "
            << report.issues.size() << "\n";
  return report.issues.empty() ? kOk : kFindings;
}

// ----------------------------------------------------------------- eval-rec

struct EvalRecOpts {
  std::string images;
  std::string detections;
  std::string labels;
  std::string report = "recognition_report.json";
  std::string confusion = "confusion.csv";
  std::string image_ext = ".ppm";
  std::string label_subdir;
  double row_gap_factor = 0.5;
};

int run_eval_rec(const EvalRecOpts& opts) {
  const auto index =
      platekit::build_index(opts.images, opts.image_ext, opts.label_subdir);
  const auto& alphabet = platekit::Alphabet::plate36();

  std::vector<platekit::PlatePair> pairs;
  std::vector<std::string> issues;
  for (const auto& entry : index.entries) {
    fs::path label_path = entry.label_path;
    bool have_labels = entry.has_label;
    if (!opts.labels.empty()) {
      label_path = fs::path(opts.labels) / (entry.image_id + ".txt");
      have_labels = fs::exists(label_path);
    }
    if (!have_labels) {
      issues.push_back(entry.image_id + ": no ground-truth label file");
      continue;
    }

    platekit::PlatePair pair;
    pair.id = entry.image_id;
    try {
      std::vector<platekit::LabelRecord> chars;
      for (const auto& r :
           platekit::parse_label_file(platekit::read_file(label_path))) {
        // Records outside the recognition alphabet (the plate box) are
        // not characters.
        if (static_cast<std::size_t>(r.category_id) < alphabet.size()) {
          chars.push_back(r);
        }
      }
      pair.truth = platekit::assemble_transcript(chars, alphabet,
                                                 opts.row_gap_factor);

      const fs::path det_path =
          fs::path(opts.detections) / (entry.image_id + ".txt");
      if (fs::exists(det_path)) {
        std::vector<platekit::DetectionRecord> dets;
        for (const auto& r : platekit::parse_detection_file(
                 platekit::read_file(det_path))) {
          if (static_cast<std::size_t>(r.category_id) < alphabet.size()) {
            dets.push_back(r);
          }
        }
        pair.pred = platekit::assemble_transcript(dets, alphabet,
                                                  opts.row_gap_factor);
      } else {
        issues.push_back(entry.image_id + ": no detection file");
      }
    } catch (const platekit::Error& e) {
      issues.push_back(entry.image_id + ": " + e.what());
      continue;
    }
    pairs.push_back(std::move(pair));
  }

  platekit::RecognitionReport report;
  try {
    report = platekit::evaluate_recognition(pairs, alphabet);
  } catch (const platekit::EvalError& e) {
    std::cerr << "eval-rec: " << e.what() << "\n";
    return kFindings;
  }

  nlohmann::json j = platekit::to_json(report);
  j["issues"] = issues;
  write_json_report(opts.report, j);
  platekit::write_file(opts.confusion,
                       platekit::confusion_to_csv(report.confusion));

  std::cout << "CER          " << fixed3(report.cer) << "\n"
            << "char recall  " << fixed3(report.char_recall) << "\n"
            << "exact match  " << fixed3(report.exact_match_rate) << "\n"
            << "plates " << report.plate_count << ", truth chars "
            << report.total_truth_chars << ", issues " << issues.size()
            << "\n";
  return issues.empty() ? kOk : kFindings;
}

// -------------------------------------------------------------------- synth

struct SynthOpts {
  std::string out;
  int count = 0;
  std::uint64_t seed = 0;
  int jobs = 1;
  int min_length = 5;
  int max_length = 7;
  double rotation_deg = 8.0;
  double perspective_jitter = 0.06;
};

int run_synth(const SynthOpts& opts) {
  platekit::GenerateConfig config;
  config.count = opts.count;
  config.out_dir = opts.out;
  config.layouts = platekit::default_layouts();
  config.glyphs = platekit::builtin_glyphs();
  config.augment.seed = opts.seed;
  config.augment.rotation_deg = opts.rotation_deg;
  config.augment.perspective_jitter = opts.perspective_jitter;
  config.text.min_length = opts.min_length;
  config.text.max_length = opts.max_length;
  config.jobs = opts.jobs;

  const auto manifest = platekit::generate_dataset(config);
  std::cout << "wrote " << manifest.items.size() << " items to " << opts.out
            << " (manifest: " << manifest.manifest_path.generic_string()
            << ")\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plate dataset tooling: pseudo-labeling, metrics, synthesis"};
  app.require_subcommand(1);

  ValidateOpts validate_opts;
  auto* validate = app.add_subcommand(
      "validate", "check every label/detection file under a dataset root");
  validate->add_option("--root", validate_opts.root, "dataset root")
      ->required();
  validate->add_option("--max-category", validate_opts.max_category,
                       "largest allowed category id")
      ->check(CLI::NonNegativeNumber);
  validate->add_option("--report", validate_opts.report, "JSON report path");
  validate->add_option("--image-ext", validate_opts.image_ext,
                       "image extension");
  validate->add_option("--label-subdir", validate_opts.label_subdir,
                       "label subdirectory next to images");

  PseudoOpts filter_opts;
  auto* filter = app.add_subcommand(
      "filter", "turn detection files into label files (no human merge)");
  PseudoOpts merge_opts;
  auto* merge = app.add_subcommand(
      "merge", "filter detections and merge with human label files");
  for (auto [cmd, opts] : {std::pair{filter, &filter_opts},
                           std::pair{merge, &merge_opts}}) {
    cmd->add_option("--images", opts->images, "image root")->required();
    cmd->add_option("--detections", opts->detections, "detection file root")
        ->required();
    cmd->add_option("--out", opts->out, "output label root")->required();
    cmd->add_option("--report", opts->report, "JSON report path");
    cmd->add_option("--image-ext", opts->image_ext, "image extension");
    cmd->add_option("--label-subdir", opts->label_subdir,
                    "label subdirectory next to images");
    cmd->add_option("--min-confidence", opts->min_confidence,
                    "confidence gate")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--suppression-iou", opts->suppression_iou,
                    "greedy suppression IoU")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--max-per-image", opts->max_per_image,
                    "cap on retained labels per image");
  }
  merge->add_option("--precedence-iou", merge_opts.precedence_iou,
                    "IoU at which a human label overrides a pseudo label")
      ->check(CLI::Range(0.0, 1.0));

  EvalDetOpts eval_det_opts;
  auto* eval_det =
      app.add_subcommand("eval-det", "detection evaluation (AP across IoU thresholds)");
  eval_det->add_option("--images", eval_det_opts.images, "image root")
      ->required();
  eval_det->add_option("--detections", eval_det_opts.detections,
                       "detection file root")
      ->required();
  eval_det->add_option("--labels", eval_det_opts.labels,
                       "ground-truth label root (default: beside images)");
  eval_det->add_option("--report", eval_det_opts.report, "JSON report path");
  eval_det->add_option("--image-ext", eval_det_opts.image_ext,
                       "image extension");
  eval_det->add_option("--label-subdir", eval_det_opts.label_subdir,
                       "label subdirectory next to images");
  eval_det
      ->add_option("--iou-thresholds", eval_det_opts.thresholds,
                   "comma-separated IoU thresholds")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));

  EvalRecOpts eval_rec_opts;
  auto* eval_rec = app.add_subcommand(
      "eval-rec", "recognition evaluation (CER, recall, confusion matrix)");
  eval_rec->add_option("--images", eval_rec_opts.images, "image root")
      ->required();
  eval_rec->add_option("--detections", eval_rec_opts.detections,
                       "character detection file root")
      ->required();
  eval_rec->add_option("--labels", eval_rec_opts.labels,
                       "ground-truth label root (default: beside images)");
  eval_rec->add_option("--report", eval_rec_opts.report, "JSON report path");
  eval_rec->add_option("--confusion", eval_rec_opts.confusion,
                       "confusion matrix CSV path");
  eval_rec->add_option("--image-ext", eval_rec_opts.image_ext,
                       "image extension");
  eval_rec->add_option("--label-subdir", eval_rec_opts.label_subdir,
                       "label subdirectory next to images");
  eval_rec
      ->add_option("--row-gap-factor", eval_rec_opts.row_gap_factor,
                   "row split threshold as a fraction of median box height")
      ->check(CLI::NonNegativeNumber);

  SynthOpts synth_opts;
  auto* synth = app.add_subcommand(
      "synth", "generate a deterministic synthetic plate dataset");
  synth->add_option("--out", synth_opts.out, "output directory")->required();
  synth->add_option("--count", synth_opts.count, "number of plates")
      ->required()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_opts.seed, "generator seed");
  synth->add_option("--jobs", synth_opts.jobs, "worker threads")
      ->check(CLI::PositiveNumber);
  synth->add_option("--min-len", synth_opts.min_length, "shortest plate text")
      ->check(CLI::PositiveNumber);
  synth->add_option("--max-len", synth_opts.max_length, "longest plate text")
      ->check(CLI::PositiveNumber);
  synth->add_option("--rotation", synth_opts.rotation_deg,
                    "max rotation in degrees");
  synth->add_option("--jitter", synth_opts.perspective_jitter,
                    "max corner displacement as a fraction of each side")
      ->check(CLI::Range(0.0, 0.25));

  int status = kOk;
  validate->callback([&] { status = run_validate(validate_opts); });
  filter->callback([&] { status = run_pseudo(filter_opts, false); });
  merge->callback([&] { status = run_pseudo(merge_opts, true); });
  eval_det->callback([&] { status = run_eval_det(eval_det_opts); });
  eval_rec->callback([&] { status = run_eval_rec(eval_rec_opts); });
  synth->callback([&] { status = run_synth(synth_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const platekit::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const platekit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFindings;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFindings;
  }
  return status;
}
