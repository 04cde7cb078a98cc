#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "platekit/annotation_io.hpp"
#include "platekit/errors.hpp"

namespace platekit {

enum class EditOpKind { kMatch, kSubstitute, kDelete, kInsert };

/// One step of the edit trace. `truth` is set for Match/Substitute/Delete,
/// `pred` for Match/Substitute/Insert; the unused side is '\0'.
struct EditOp {
  EditOpKind kind = EditOpKind::kMatch;
  char truth = '\0';
  char pred = '\0';

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct Alignment {
  std::vector<EditOp> ops;

  std::string truth_side() const {
    std::string s;
    for (const auto& op : ops) {
      if (op.kind != EditOpKind::kInsert) s.push_back(op.truth);
    }
    return s;
  }

  std::string pred_side() const {
    std::string s;
    for (const auto& op : ops) {
      if (op.kind != EditOpKind::kDelete) s.push_back(op.pred);
    }
    return s;
  }
};

struct AlignmentResult {
  std::size_t distance = 0;
  Alignment alignment;
};

/// Levenshtein distance with unit costs plus the deterministic backtrace.
/// Ties prefer Match/Substitute, then Delete (truth character the prediction
/// missed), then Insert (spurious predicted character).
inline AlignmentResult edit_alignment(std::string_view truth,
                                      std::string_view pred) {
  const std::size_t n = truth.size();
  const std::size_t m = pred.size();
  std::vector<std::uint32_t> dist((n + 1) * (m + 1));
  const auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& {
    return dist[i * (m + 1) + j];
  };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t sub_cost = truth[i - 1] == pred[j - 1] ? 0 : 1;
      at(i, j) = std::min({at(i - 1, j - 1) + sub_cost, at(i - 1, j) + 1,
                           at(i, j - 1) + 1});
    }
  }

  AlignmentResult result;
  result.distance = at(n, m);
  std::size_t i = n;
  std::size_t j = m;
  auto& ops = result.alignment.ops;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (truth[i - 1] == pred[j - 1] ? 0 : 1)) {
      ops.push_back(EditOp{truth[i - 1] == pred[j - 1]
                               ? EditOpKind::kMatch
                               : EditOpKind::kSubstitute,
                           truth[i - 1], pred[j - 1]});
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ops.push_back(EditOp{EditOpKind::kDelete, truth[i - 1], '\0'});
      --i;
    } else {
      ops.push_back(EditOp{EditOpKind::kInsert, '\0', pred[j - 1]});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return result;
}

/// Character-by-character counts over alphabet + an absence symbol.
/// Rows index the truth character, columns the predicted one; the last
/// row/column stands for "no character" (insertions / deletions).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(Alphabet alphabet)
      : alphabet_(std::move(alphabet)),
        counts_((alphabet_.size() + 1) * (alphabet_.size() + 1), 0) {}

  std::size_t absent_index() const { return alphabet_.size(); }
  const Alphabet& alphabet() const { return alphabet_; }

  std::uint64_t at(std::size_t truth_idx, std::size_t pred_idx) const {
    return counts_[truth_idx * (alphabet_.size() + 1) + pred_idx];
  }

  std::uint64_t at(char truth_char, char pred_char) const {
    return at(static_cast<std::size_t>(alphabet_.index_of(truth_char)),
              static_cast<std::size_t>(alphabet_.index_of(pred_char)));
  }

  void add(const Alignment& alignment) {
    const std::size_t absent = absent_index();
    for (const auto& op : alignment.ops) {
      switch (op.kind) {
        case EditOpKind::kMatch:
          bump(index(op.truth), index(op.pred));
          break;
        case EditOpKind::kSubstitute:
          bump(index(op.truth), index(op.pred));
          break;
        case EditOpKind::kDelete:
          bump(index(op.truth), absent);
          break;
        case EditOpKind::kInsert:
          bump(absent, index(op.pred));
          break;
      }
    }
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto c : counts_) t += c;
    return t;
  }

 private:
  std::size_t index(char c) const {
    return static_cast<std::size_t>(alphabet_.index_of(c));
  }
  void bump(std::size_t t, std::size_t p) {
    ++counts_[t * (alphabet_.size() + 1) + p];
  }

  Alphabet alphabet_;
  std::vector<std::uint64_t> counts_;
};

/// CSV grid of the confusion counts: header row of predicted symbols, one
/// row per truth symbol, absence symbol "-" last in both directions.
inline std::string confusion_to_csv(const ConfusionMatrix& cm) {
  const auto& alphabet = cm.alphabet();
  const std::size_t n = alphabet.size() + 1;
  const auto symbol = [&](std::size_t i) {
    return i < alphabet.size() ? std::string(1, alphabet.at(i))
                               : std::string("-");
  };
  std::string out = "truth\\pred";
  for (std::size_t p = 0; p < n; ++p) out += "," + symbol(p);
  out += "\n";
  for (std::size_t t = 0; t < n; ++t) {
    out += symbol(t);
    for (std::size_t p = 0; p < n; ++p) {
      out += "," + std::to_string(cm.at(t, p));
    }
    out += "\n";
  }
  return out;
}

/// A (truth, prediction) transcript pair; `id` is carried through to the
/// per-plate detail list and may be empty.
struct PlatePair {
  std::string id;
  std::string truth;
  std::string pred;
};

struct PlateDetail {
  std::string id;
  std::string truth;
  std::string pred;
  std::size_t distance = 0;
};

struct RecognitionReport {
  double cer = 0.0;
  double char_recall = 0.0;
  double exact_match_rate = 0.0;
  std::size_t total_truth_chars = 0;
  std::size_t total_matches = 0;
  std::size_t total_edits = 0;
  std::size_t plate_count = 0;
  ConfusionMatrix confusion{Alphabet::plate36()};
  std::vector<PlateDetail> plates;
};

/// Micro-averaged recognition metrics over a corpus of transcript pairs.
/// CER divides total edits by total ground-truth characters; recall counts
/// exact character matches against the same denominator.
inline RecognitionReport evaluate_recognition(
    std::span<const PlatePair> pairs, const Alphabet& alphabet) {
  RecognitionReport report;
  report.confusion = ConfusionMatrix(alphabet);
  std::size_t exact = 0;
  for (const auto& pair : pairs) {
    const auto result = edit_alignment(pair.truth, pair.pred);
    report.total_truth_chars += pair.truth.size();
    report.total_edits += result.distance;
    if (result.distance == 0) ++exact;
    for (const auto& op : result.alignment.ops) {
      if (op.kind == EditOpKind::kMatch) ++report.total_matches;
    }
    report.confusion.add(result.alignment);
    report.plates.push_back(
        PlateDetail{pair.id, pair.truth, pair.pred, result.distance});
  }
  if (report.total_truth_chars == 0) {
    throw EvalError("recognition metrics undefined: no ground-truth characters");
  }
  report.plate_count = pairs.size();
  const double denom = static_cast<double>(report.total_truth_chars);
  report.cer = static_cast<double>(report.total_edits) / denom;
  report.char_recall = static_cast<double>(report.total_matches) / denom;
  report.exact_match_rate =
      static_cast<double>(exact) / static_cast<double>(pairs.size());
  return report;
}

namespace detail {

template <typename Record>
inline std::string assemble_transcript_impl(std::span<const Record> records,
                                            const Alphabet& alphabet,
                                            double row_gap_factor) {
  if (records.empty()) return "";
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return records[a].box.cy < records[b].box.cy;
                   });

  std::vector<double> heights;
  heights.reserve(records.size());
  for (const auto& r : records) heights.push_back(r.box.h);
  std::sort(heights.begin(), heights.end());
  const std::size_t mid = heights.size() / 2;
  const double median_height =
      heights.size() % 2 == 1
          ? heights[mid]
          : (heights[mid - 1] + heights[mid]) / 2.0;

  // Rows split where the vertical step between cy-sorted boxes exceeds the
  // gap factor times the median box height.
  std::vector<std::vector<std::size_t>> rows;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const bool new_row =
        k == 0 || records[order[k]].box.cy - records[order[k - 1]].box.cy >
                      row_gap_factor * median_height;
    if (new_row) rows.emplace_back();
    rows.back().push_back(order[k]);
  }

  std::string text;
  for (auto& row : rows) {
    std::stable_sort(row.begin(), row.end(), [&](std::size_t a, std::size_t b) {
      return records[a].box.cx < records[b].box.cx;
    });
    for (const std::size_t i : row) {
      const int cat = records[i].category_id;
      if (cat < 0 || static_cast<std::size_t>(cat) >= alphabet.size()) {
        throw EvalError("category " + std::to_string(cat) +
                        " outside alphabet of size " +
                        std::to_string(alphabet.size()));
      }
      text.push_back(alphabet.at(static_cast<std::size_t>(cat)));
    }
  }
  return text;
}

}  // namespace detail

/// Orders character boxes into a plate string: cluster rows top-to-bottom,
/// read each row left-to-right.
inline std::string assemble_transcript(std::span<const DetectionRecord> dets,
                                       const Alphabet& alphabet,
                                       double row_gap_factor = 0.5) {
  return detail::assemble_transcript_impl(dets, alphabet, row_gap_factor);
}

inline std::string assemble_transcript(std::span<const LabelRecord> labels,
                                       const Alphabet& alphabet,
                                       double row_gap_factor = 0.5) {
  return detail::assemble_transcript_impl(labels, alphabet, row_gap_factor);
}

}  // namespace platekit
