#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "platekit/errors.hpp"
#include "platekit/fsutil.hpp"
#include "platekit/geometry.hpp"
#include "platekit/raster.hpp"

namespace platekit {

/// Ground-truth annotation: one box, one category.
struct LabelRecord {
  int category_id = 0;
  BoxNorm box;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

/// Model prediction: a label plus a confidence score.
struct DetectionRecord {
  int category_id = 0;
  BoxNorm box;
  double confidence = 0.0;

  friend bool operator==(const DetectionRecord&,
                         const DetectionRecord&) = default;
};

/// Ordered character set; category indices address into it.
class Alphabet {
 public:
  Alphabet() = default;

  explicit Alphabet(std::string symbols) : symbols_(std::move(symbols)) {
    index_.fill(-1);
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      auto& slot = index_[static_cast<unsigned char>(symbols_[i])];
      if (slot >= 0) {
        throw Error(std::string("alphabet has duplicate character '") +
                    symbols_[i] + "'");
      }
      slot = static_cast<int>(i);
    }
  }

  /// Digits then uppercase letters, the 36-symbol plate alphabet.
  static const Alphabet& plate36() {
    static const Alphabet a("0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ");
    return a;
  }

  std::size_t size() const { return symbols_.size(); }
  char at(std::size_t i) const { return symbols_[i]; }
  const std::string& symbols() const { return symbols_; }

  bool contains(char c) const {
    return index_[static_cast<unsigned char>(c)] >= 0;
  }

  int index_of(char c) const {
    const int i = index_[static_cast<unsigned char>(c)];
    if (i < 0) {
      throw Error(std::string("character '") + c + "' not in alphabet");
    }
    return i;
  }

 private:
  std::string symbols_;
  std::array<int, 256> index_{};
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

inline double parse_fraction(std::string_view field, const char* name,
                             int line_no, double lo, double hi,
                             bool exclusive_lo) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError(std::string("non-numeric field ") + name, line_no);
  }
  const bool below = exclusive_lo ? value <= lo : value < lo;
  if (below || value > hi) {
    throw ParseError(std::string("field ") + name + " out of range", line_no);
  }
  return value;
}

inline int parse_category(std::string_view field, int line_no) {
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError("non-numeric category", line_no);
  }
  if (value < 0) {
    throw ParseError("negative category", line_no);
  }
  return value;
}

inline BoxNorm parse_box(std::span<const std::string_view> fields,
                         int line_no) {
  return BoxNorm{
      parse_fraction(fields[0], "cx", line_no, 0.0, 1.0, false),
      parse_fraction(fields[1], "cy", line_no, 0.0, 1.0, false),
      parse_fraction(fields[2], "w", line_no, 0.0, 1.0, true),
      parse_fraction(fields[3], "h", line_no, 0.0, 1.0, true),
  };
}

template <typename Fn>
inline void for_each_line(std::string_view text, Fn&& fn) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    fn(line, line_no);
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
}

}  // namespace detail

/// One record per non-empty line, "category cx cy w h".
inline std::vector<LabelRecord> parse_label_file(std::string_view text) {
  std::vector<LabelRecord> records;
  detail::for_each_line(text, [&](std::string_view line, int line_no) {
    const auto fields = detail::split_fields(line);
    if (fields.empty()) return;
    if (fields.size() != 5) {
      throw ParseError("expected 5 fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    records.push_back(
        LabelRecord{detail::parse_category(fields[0], line_no),
                    detail::parse_box({fields.begin() + 1, 4}, line_no)});
  });
  return records;
}

/// Same as parse_label_file with a sixth confidence field in [0,1].
inline std::vector<DetectionRecord> parse_detection_file(
    std::string_view text) {
  std::vector<DetectionRecord> records;
  detail::for_each_line(text, [&](std::string_view line, int line_no) {
    const auto fields = detail::split_fields(line);
    if (fields.empty()) return;
    if (fields.size() != 6) {
      throw ParseError("expected 6 fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    records.push_back(DetectionRecord{
        detail::parse_category(fields[0], line_no),
        detail::parse_box({fields.begin() + 1, 4}, line_no),
        detail::parse_fraction(fields[5], "confidence", line_no, 0.0, 1.0,
                               false)});
  });
  return records;
}

/// Renders "category cx cy w h" lines, coordinates at exactly 6 decimals,
/// LF-terminated. Byte-stable across platforms.
inline std::string write_label_file(std::span<const LabelRecord> records) {
  std::string out;
  char buf[96];
  for (const auto& r : records) {
    const int n = std::snprintf(buf, sizeof(buf), "%d %.6f %.6f %.6f %.6f\n",
                                r.category_id, r.box.cx, r.box.cy, r.box.w,
                                r.box.h);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

inline std::string write_detection_file(
    std::span<const DetectionRecord> records) {
  std::string out;
  char buf[112];
  for (const auto& r : records) {
    const int n =
        std::snprintf(buf, sizeof(buf), "%d %.6f %.6f %.6f %.6f %.6f\n",
                      r.category_id, r.box.cx, r.box.cy, r.box.w, r.box.h,
                      r.confidence);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

struct IndexEntry {
  std::string image_id;
  std::filesystem::path image_path;
  std::filesystem::path label_path;  // may not exist; see has_label
  int width = 0;
  int height = 0;
  bool has_label = false;
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

/// Deterministic listing of a dataset directory: entries sorted by image_id,
/// plus the files that could not be indexed.
struct DatasetIndex {
  std::vector<IndexEntry> entries;
  std::vector<SkippedFile> skipped;
};

/// Walks `root` for images with `image_extension`, pairing each with
/// `<stem>.txt` beside it (or under `label_subdir` next to it). Dimensions
/// come from the PPM header; unreadable headers skip the entry with a note.
inline DatasetIndex build_index(const std::filesystem::path& root,
                                std::string_view image_extension = ".ppm",
                                std::string_view label_subdir = "") {
  namespace fs = std::filesystem;
  if (!fs::exists(root) || !fs::is_directory(root)) {
    throw IoError("dataset root " + root.string() + " is not a directory");
  }
  DatasetIndex index;
  for (const auto& item : fs::recursive_directory_iterator(root)) {
    if (!item.is_regular_file()) continue;
    const fs::path& p = item.path();
    if (p.extension().string() != image_extension) continue;

    IndexEntry entry;
    entry.image_path = p;
    entry.image_id =
        fs::relative(p, root).replace_extension("").generic_string();
    const fs::path label_dir =
        label_subdir.empty() ? p.parent_path()
                             : p.parent_path() / label_subdir;
    entry.label_path = label_dir / (p.stem().string() + ".txt");
    entry.has_label = fs::exists(entry.label_path);
    try {
      std::ifstream in(p, std::ios::binary);
      char header[64] = {};
      in.read(header, sizeof(header));
      const auto dims = read_ppm_header(
          std::string_view(header, static_cast<std::size_t>(in.gcount())));
      entry.width = dims.width;
      entry.height = dims.height;
    } catch (const FormatError& e) {
      index.skipped.push_back({p.generic_string(), e.what()});
      continue;
    }
    index.entries.push_back(std::move(entry));
  }
  std::sort(index.entries.begin(), index.entries.end(),
            [](const IndexEntry& a, const IndexEntry& b) {
              return a.image_id < b.image_id;
            });
  std::sort(index.skipped.begin(), index.skipped.end(),
            [](const SkippedFile& a, const SkippedFile& b) {
              return a.path < b.path;
            });
  return index;
}

}  // namespace platekit
