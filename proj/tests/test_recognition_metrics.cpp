#include "doctest.h"

#include <string>
#include <vector>

#include "oracles.hpp"
#include "platekit/recognition_metrics.hpp"
#include "platekit/rng.hpp"

using namespace platekit;

namespace {

DetectionRecord char_det(int category, double cx, double cy, double h = 0.2,
                         double w = 0.1) {
  return DetectionRecord{category, BoxNorm{cx, cy, w, h}, 1.0};
}

std::size_t count_ops(const Alignment& a, EditOpKind kind) {
  std::size_t n = 0;
  for (const auto& op : a.ops) {
    if (op.kind == kind) ++n;
  }
  return n;
}

std::string random_string(SplitMix64& rng, const std::string& symbols,
                          std::size_t max_len) {
  std::string s;
  const std::size_t len = rng.below(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) {
    s.push_back(symbols[rng.below(symbols.size())]);
  }
  return s;
}

}  // namespace

TEST_CASE("assemble_transcript orders a single row by x") {
  const Alphabet& a = Alphabet::plate36();
  const std::vector<DetectionRecord> dets = {
      char_det(a.index_of('B'), 0.5, 0.5), char_det(a.index_of('A'), 0.2, 0.5),
      char_det(a.index_of('C'), 0.8, 0.5)};
  CHECK(assemble_transcript(dets, a) == "ABC");
}

TEST_CASE("assemble_transcript splits rows on large vertical gaps") {
  const Alphabet& a = Alphabet::plate36();
  // top row AB at cy 0.3, bottom row 12 at cy 0.7, box height 0.2:
  // the 0.4 gap exceeds 0.5 * 0.2
  const std::vector<DetectionRecord> dets = {
      char_det(a.index_of('1'), 0.3, 0.7), char_det(a.index_of('B'), 0.6, 0.3),
      char_det(a.index_of('A'), 0.3, 0.3), char_det(a.index_of('2'), 0.6, 0.7)};
  CHECK(assemble_transcript(dets, a) == "AB12");
}

TEST_CASE("assemble_transcript keeps one row when gaps stay small") {
  const Alphabet& a = Alphabet::plate36();
  const std::vector<DetectionRecord> dets = {
      char_det(a.index_of('A'), 0.2, 0.50), char_det(a.index_of('B'), 0.5, 0.54),
      char_det(a.index_of('C'), 0.8, 0.58)};
  CHECK(assemble_transcript(dets, a) == "ABC");
}

TEST_CASE("assemble_transcript of nothing is empty") {
  CHECK(assemble_transcript(std::vector<DetectionRecord>{},
                            Alphabet::plate36()) == "");
}

TEST_CASE("assemble_transcript rejects categories outside the alphabet") {
  const std::vector<DetectionRecord> dets = {char_det(36, 0.5, 0.5)};
  CHECK_THROWS_AS(assemble_transcript(dets, Alphabet::plate36()), EvalError);
}

TEST_CASE("edit_alignment of equal strings is all matches") {
  const auto [distance, alignment] = edit_alignment("ABC123", "ABC123");
  CHECK(distance == 0);
  CHECK(alignment.ops.size() == 6);
  CHECK(count_ops(alignment, EditOpKind::kMatch) == 6);
}

TEST_CASE("edit_alignment pinpoints a single substitution") {
  const auto [distance, alignment] = edit_alignment("ABC123", "A8C123");
  CHECK(distance == 1);
  REQUIRE(alignment.ops.size() == 6);
  CHECK(alignment.ops[1] ==
        EditOp{EditOpKind::kSubstitute, 'B', '8'});
  CHECK(count_ops(alignment, EditOpKind::kMatch) == 5);
}

TEST_CASE("edit_alignment of an empty prediction is all deletes") {
  const auto [distance, alignment] = edit_alignment("AB", "");
  CHECK(distance == 2);
  REQUIRE(alignment.ops.size() == 2);
  CHECK(alignment.ops[0] == EditOp{EditOpKind::kDelete, 'A', '\0'});
  CHECK(alignment.ops[1] == EditOp{EditOpKind::kDelete, 'B', '\0'});
}

TEST_CASE("edit distance matches the recursive oracle on random pairs") {
  SplitMix64 rng(41);
  const std::string symbols = Alphabet::plate36().symbols();
  for (int i = 0; i < 500; ++i) {
    const std::string truth = random_string(rng, symbols, 12);
    const std::string pred = random_string(rng, symbols, 12);
    CHECK(edit_alignment(truth, pred).distance ==
          oracles::levenshtein(truth, pred));
  }
}

TEST_CASE("alignments reconstruct both inputs and count their cost") {
  SplitMix64 rng(42);
  const std::string symbols = "AB1";
  for (int i = 0; i < 2000; ++i) {
    const std::string truth = random_string(rng, symbols, 8);
    const std::string pred = random_string(rng, symbols, 8);
    const auto [distance, alignment] = edit_alignment(truth, pred);
    CHECK(alignment.truth_side() == truth);
    CHECK(alignment.pred_side() == pred);
    CHECK(distance == count_ops(alignment, EditOpKind::kSubstitute) +
                          count_ops(alignment, EditOpKind::kDelete) +
                          count_ops(alignment, EditOpKind::kInsert));
  }
}

TEST_CASE("edit distance satisfies the triangle inequality") {
  SplitMix64 rng(43);
  const std::string symbols = Alphabet::plate36().symbols();
  for (int i = 0; i < 300; ++i) {
    const std::string a = random_string(rng, symbols, 10);
    const std::string b = random_string(rng, symbols, 10);
    const std::string c = random_string(rng, symbols, 10);
    CHECK(edit_alignment(a, c).distance <=
          edit_alignment(a, b).distance + edit_alignment(b, c).distance);
  }
}

TEST_CASE("evaluate_recognition computes micro-averaged CER") {
  const std::vector<PlatePair> pairs = {{"p1", "ABC1234", "ABC1234"},
                                        {"p2", "XYZ9876", "XYZ9B76"}};
  const auto report = evaluate_recognition(pairs, Alphabet::plate36());
  CHECK(report.cer == doctest::Approx(1.0 / 14.0).epsilon(1e-12));
  CHECK(report.total_truth_chars == 14);
  CHECK(report.exact_match_rate == doctest::Approx(0.5));
}

TEST_CASE("evaluate_recognition on perfect predictions") {
  const std::vector<PlatePair> pairs = {{"p1", "AAA111", "AAA111"},
                                        {"p2", "ZZ", "ZZ"}};
  const auto report = evaluate_recognition(pairs, Alphabet::plate36());
  CHECK(report.cer == 0.0);
  CHECK(report.char_recall == 1.0);
  CHECK(report.exact_match_rate == 1.0);
}

TEST_CASE("char recall counts matches over truth length") {
  // truth 10 chars, one substitution -> 9 matches
  const std::vector<PlatePair> pairs = {{"p1", "ABCDE", "ABCDE"},
                                        {"p2", "FGHIJ", "FGHIX"}};
  const auto report = evaluate_recognition(pairs, Alphabet::plate36());
  CHECK(report.char_recall == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("evaluate_recognition rejects an empty truth corpus") {
  const std::vector<PlatePair> pairs = {{"p1", "", ""}};
  CHECK_THROWS_AS(evaluate_recognition(pairs, Alphabet::plate36()), EvalError);
}

TEST_CASE("confusion matrix cells follow the alignment ops") {
  const Alphabet& a = Alphabet::plate36();
  ConfusionMatrix cm(a);

  Alignment sub;
  sub.ops.push_back(EditOp{EditOpKind::kSubstitute, 'B', '8'});
  cm.add(sub);
  CHECK(cm.at('B', '8') == 1);
  CHECK(cm.total() == 1);

  Alignment ins;
  ins.ops.push_back(EditOp{EditOpKind::kInsert, '\0', 'Q'});
  cm.add(ins);
  CHECK(cm.at(cm.absent_index(), static_cast<std::size_t>(a.index_of('Q'))) ==
        1);

  Alignment del;
  del.ops.push_back(EditOp{EditOpKind::kDelete, 'C', '\0'});
  cm.add(del);
  CHECK(cm.at(static_cast<std::size_t>(a.index_of('C')), cm.absent_index()) ==
        1);
}

TEST_CASE("confusion CSV is a full grid with the absence symbol last") {
  const Alphabet& a = Alphabet::plate36();
  ConfusionMatrix cm(a);
  const std::string csv = confusion_to_csv(cm);

  // 1 header + 37 rows, each with 38 columns
  std::size_t rows = 0;
  for (const char c : csv) rows += c == '\n';
  CHECK(rows == 38);
  CHECK(csv.substr(0, 14) == "truth\\pred,0,1");
  CHECK(csv.find(",-\n") != std::string::npos);
}

TEST_CASE("confusion total equals truth length plus insertions") {
  SplitMix64 rng(44);
  const std::string symbols = Alphabet::plate36().symbols();
  std::vector<PlatePair> pairs;
  std::size_t truth_chars = 0;
  for (int i = 0; i < 50; ++i) {
    PlatePair p;
    p.truth = random_string(rng, symbols, 9);
    p.pred = random_string(rng, symbols, 9);
    truth_chars += p.truth.size();
    pairs.push_back(std::move(p));
  }
  if (truth_chars == 0) return;
  const auto report = evaluate_recognition(pairs, Alphabet::plate36());
  std::size_t inserts = 0;
  for (const auto& pair : pairs) {
    const auto [d, alignment] = edit_alignment(pair.truth, pair.pred);
    inserts += count_ops(alignment, EditOpKind::kInsert);
  }
  CHECK(report.confusion.total() == truth_chars + inserts);
}
