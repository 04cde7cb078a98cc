#include "doctest.h"

#include <array>
#include <cmath>

#include "platekit/geometry.hpp"
#include "platekit/rng.hpp"

using namespace platekit;

TEST_CASE("iou of identical boxes is 1") {
  const BoxPixel a{0, 0, 2, 2};
  CHECK(iou(a, a) == doctest::Approx(1.0));
}

TEST_CASE("iou of disjoint boxes is 0") {
  CHECK(iou(BoxPixel{0, 0, 1, 1}, BoxPixel{5, 5, 6, 6}) == 0.0);
}

TEST_CASE("iou of half-overlapping boxes") {
  // intersection 2, union 6
  CHECK(iou(BoxPixel{0, 0, 2, 2}, BoxPixel{1, 0, 3, 2}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("iou of degenerate boxes is 0") {
  const BoxPixel zero{1, 1, 1, 1};
  CHECK(iou(zero, zero) == 0.0);
}

TEST_CASE("iou is symmetric for random boxes") {
  SplitMix64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto make = [&] {
      const double x0 = rng.uniform(0, 80);
      const double y0 = rng.uniform(0, 80);
      return BoxPixel{x0, y0, x0 + rng.uniform(0.1, 20),
                      y0 + rng.uniform(0.1, 20)};
    };
    const BoxPixel a = make();
    const BoxPixel b = make();
    CHECK(iou(a, b) == iou(b, a));
    CHECK(iou(a, a) == doctest::Approx(1.0));
  }
}

TEST_CASE("to_pixel maps the full-frame box to the full frame") {
  CHECK(to_pixel(BoxNorm{0.5, 0.5, 1, 1}, 100, 50) ==
        BoxPixel{0, 0, 100, 50});
}

TEST_CASE("to_pixel scales center and extent") {
  const BoxPixel p = to_pixel(BoxNorm{0.5, 0.5, 0.2, 0.4}, 100, 100);
  CHECK(p.x_min == doctest::Approx(40));
  CHECK(p.y_min == doctest::Approx(30));
  CHECK(p.x_max == doctest::Approx(60));
  CHECK(p.y_max == doctest::Approx(70));
}

TEST_CASE("to_pixel clamps extents that poke out of frame") {
  const BoxPixel p = to_pixel(BoxNorm{0.05, 0.5, 0.2, 0.2}, 100, 100);
  CHECK(p.x_min == 0.0);  // clamped from -5
  CHECK(p.y_min == doctest::Approx(40));
  CHECK(p.x_max == doctest::Approx(15));
  CHECK(p.y_max == doctest::Approx(60));
}

TEST_CASE("from_pixel inverts to_pixel") {
  const BoxNorm n = from_pixel(BoxPixel{40, 30, 60, 70}, 100, 100);
  CHECK(n.cx == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(n.cy == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(n.w == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(n.h == doctest::Approx(0.4).epsilon(1e-12));

  CHECK(from_pixel(BoxPixel{0, 0, 100, 50}, 100, 50) ==
        BoxNorm{0.5, 0.5, 1, 1});
}

TEST_CASE("from_pixel rejects zero-area boxes") {
  CHECK_THROWS_AS(from_pixel(BoxPixel{10, 10, 10, 20}, 100, 100),
                  GeometryError);
}

TEST_CASE("pixel/normalized round trips stay within 1e-9") {
  SplitMix64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const double w = rng.uniform(0.01, 0.5);
    const double h = rng.uniform(0.01, 0.5);
    const double cx = rng.uniform(w / 2, 1 - w / 2);
    const double cy = rng.uniform(h / 2, 1 - h / 2);
    const BoxNorm n{cx, cy, w, h};
    const BoxNorm back = from_pixel(to_pixel(n, 640, 480), 640, 480);
    CHECK(std::abs(back.cx - n.cx) <= 1e-9);
    CHECK(std::abs(back.cy - n.cy) <= 1e-9);
    CHECK(std::abs(back.w - n.w) <= 1e-9);
    CHECK(std::abs(back.h - n.h) <= 1e-9);

    // and the other direction, for in-frame pixel boxes
    const BoxPixel p = to_pixel(n, 640, 480);
    const BoxPixel p_back = to_pixel(from_pixel(p, 640, 480), 640, 480);
    CHECK(std::abs(p_back.x_min - p.x_min) <= 1e-9);
    CHECK(std::abs(p_back.y_min - p.y_min) <= 1e-9);
    CHECK(std::abs(p_back.x_max - p.x_max) <= 1e-9);
    CHECK(std::abs(p_back.y_max - p.y_max) <= 1e-9);
  }
}

namespace {

const std::array<Point2, 4> kUnitSquare = {Point2{0, 0}, Point2{1, 0},
                                           Point2{1, 1}, Point2{0, 1}};

}  // namespace

TEST_CASE("solve_homography on identical quads gives the identity") {
  const Homography h = solve_homography(kUnitSquare, kUnitSquare);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      CHECK(h.at(r, c) == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("solve_homography recovers a pure translation") {
  std::array<Point2, 4> dst = kUnitSquare;
  for (auto& p : dst) p.x += 1.0;
  const Homography h = solve_homography(kUnitSquare, dst);
  const double expected[9] = {1, 0, 1, 0, 1, 0, 0, 0, 1};
  for (int i = 0; i < 9; ++i) {
    CHECK(h.at(i / 3, i % 3) == doctest::Approx(expected[i]).epsilon(1e-9));
  }
}

TEST_CASE("solve_homography recovers a scale about the origin") {
  std::array<Point2, 4> dst = kUnitSquare;
  for (auto& p : dst) {
    p.x *= 2.0;
    p.y *= 2.0;
  }
  const Homography h = solve_homography(kUnitSquare, dst);
  const double expected[9] = {2, 0, 0, 0, 2, 0, 0, 0, 1};
  for (int i = 0; i < 9; ++i) {
    CHECK(h.at(i / 3, i % 3) == doctest::Approx(expected[i]).epsilon(1e-9));
  }
}

TEST_CASE("solve_homography rejects collinear points") {
  const std::array<Point2, 4> collinear = {Point2{0, 0}, Point2{1, 1},
                                           Point2{2, 2}, Point2{3, 0}};
  CHECK_THROWS_AS(solve_homography(collinear, kUnitSquare), GeometryError);
  CHECK_THROWS_AS(solve_homography(kUnitSquare, collinear), GeometryError);
}

TEST_CASE("apply_homography basics") {
  CHECK(apply_homography(Homography::identity(), Point2{3, 4}) ==
        Point2{3, 4});
  const Point2 t = apply_homography(Homography::translation(1, 0), Point2{0, 0});
  CHECK(t.x == doctest::Approx(1.0));
  CHECK(t.y == doctest::Approx(0.0));
  const Homography scale = Homography::from_values({2, 0, 0, 0, 2, 0, 0, 0, 1});
  const Point2 s = apply_homography(scale, Point2{1, 1});
  CHECK(s.x == doctest::Approx(2.0));
  CHECK(s.y == doctest::Approx(2.0));
}

TEST_CASE("apply_homography reports points at infinity") {
  // w = 1 - x vanishes at x = 1
  const Homography h = Homography::from_values({1, 0, 0, 0, 1, 0, -1, 0, 1});
  CHECK_THROWS_AS(apply_homography(h, Point2{1.0, 0.5}), GeometryError);
}

TEST_CASE("from_values rejects singular matrices") {
  CHECK_THROWS_AS(Homography::from_values({1, 0, 0, 2, 0, 0, 0, 0, 1}),
                  GeometryError);
}

namespace {

std::array<Point2, 4> random_quad(SplitMix64& rng) {
  // Corners jittered off a square, convex by construction.
  const double s = rng.uniform(20, 120);
  const auto jitter = [&] { return rng.uniform(-0.2 * s, 0.2 * s); };
  return {Point2{jitter(), jitter()}, Point2{s + jitter(), jitter()},
          Point2{s + jitter(), s + jitter()}, Point2{jitter(), s + jitter()}};
}

}  // namespace

TEST_CASE("solved homographies reproduce their correspondences") {
  SplitMix64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const auto src = random_quad(rng);
    const auto dst = random_quad(rng);
    const Homography h = solve_homography(src, dst);
    for (int k = 0; k < 4; ++k) {
      const Point2 mapped = apply_homography(h, src[k]);
      CHECK(std::abs(mapped.x - dst[k].x) <= 1e-6);
      CHECK(std::abs(mapped.y - dst[k].y) <= 1e-6);
    }
  }
}

TEST_CASE("inverse homography undoes the forward map") {
  SplitMix64 rng(14);
  for (int i = 0; i < 200; ++i) {
    const Homography h = solve_homography(random_quad(rng), random_quad(rng));
    const Homography inv = h.inverse();
    for (int k = 0; k < 5; ++k) {
      const Point2 p{rng.uniform(-50, 150), rng.uniform(-50, 150)};
      const Point2 back = apply_homography(inv, apply_homography(h, p));
      CHECK(std::abs(back.x - p.x) <= 1e-6);
      CHECK(std::abs(back.y - p.y) <= 1e-6);
    }
  }
}
