#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "platekit/errors.hpp"

namespace platekit {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Center-format box in normalized image coordinates. This is the on-disk
/// representation; the implied extent may poke out of [0,1] and is only
/// clamped when converting to pixels.
struct BoxNorm {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool valid() const {
    return cx >= 0.0 && cx <= 1.0 && cy >= 0.0 && cy <= 1.0 && w > 0.0 &&
           w <= 1.0 && h > 0.0 && h <= 1.0;
  }

  friend bool operator==(const BoxNorm&, const BoxNorm&) = default;
};

/// Corner-format box in continuous pixel coordinates.
struct BoxPixel {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  friend bool operator==(const BoxPixel&, const BoxPixel&) = default;
};

/// Intersection over union on continuous areas. Degenerate inputs give 0.
inline double iou(const BoxPixel& a, const BoxPixel& b) {
  const double iw =
      std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih =
      std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = std::max(0.0, iw) * std::max(0.0, ih);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Normalized center box to pixel corners, clamped to the frame.
inline BoxPixel to_pixel(const BoxNorm& b, int width, int height) {
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  return BoxPixel{
      std::clamp((b.cx - b.w / 2.0) * w, 0.0, w),
      std::clamp((b.cy - b.h / 2.0) * h, 0.0, h),
      std::clamp((b.cx + b.w / 2.0) * w, 0.0, w),
      std::clamp((b.cy + b.h / 2.0) * h, 0.0, h),
  };
}

/// Pixel corners back to normalized center format. Inverse of to_pixel for
/// boxes that were never clamped.
inline BoxNorm from_pixel(const BoxPixel& b, int width, int height) {
  if (b.area() <= 0.0) {
    throw GeometryError("degenerate box: zero area");
  }
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  const BoxNorm out{(b.x_min + b.x_max) / 2.0 / w,
                    (b.y_min + b.y_max) / 2.0 / h, (b.x_max - b.x_min) / w,
                    (b.y_max - b.y_min) / h};
  if (!out.valid()) {
    throw GeometryError("box outside frame");
  }
  return out;
}

namespace detail {

using Mat3 = std::array<double, 9>;

inline Mat3 mat3_mul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out[r * 3 + c] = a[r * 3 + 0] * b[0 * 3 + c] +
                       a[r * 3 + 1] * b[1 * 3 + c] +
                       a[r * 3 + 2] * b[2 * 3 + c];
    }
  }
  return out;
}

inline double mat3_det(const Mat3& m) {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) -
         m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

inline Mat3 mat3_adjugate(const Mat3& m) {
  return Mat3{m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8],
              m[1] * m[5] - m[2] * m[4], m[5] * m[6] - m[3] * m[8],
              m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
              m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7],
              m[0] * m[4] - m[1] * m[3]};
}

}  // namespace detail

/// Invertible 3x3 projective plane transform, stored with the bottom-right
/// entry normalized to 1.
class Homography {
 public:
  Homography() = default;  // identity

  static Homography identity() { return Homography{}; }

  /// Builds from raw row-major entries, rescaling so m[8] == 1.
  static Homography from_values(const detail::Mat3& m) {
    if (std::abs(m[8]) < 1e-12) {
      throw GeometryError("homography bottom-right entry is zero");
    }
    Homography h;
    for (int i = 0; i < 9; ++i) h.m_[i] = m[i] / m[8];
    if (std::abs(detail::mat3_det(h.m_)) <= 1e-9) {
      throw GeometryError("homography is singular");
    }
    return h;
  }

  static Homography translation(double dx, double dy) {
    return from_values({1, 0, dx, 0, 1, dy, 0, 0, 1});
  }

  /// Rotation by `radians` about `center`, in image coordinates.
  static Homography rotation(double radians, Point2 center) {
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    return from_values({c, -s, center.x - c * center.x + s * center.y, s, c,
                        center.y - s * center.x - c * center.y, 0, 0, 1});
  }

  double at(int row, int col) const { return m_[row * 3 + col]; }

  Homography inverse() const {
    return from_values(detail::mat3_adjugate(m_));
  }

  /// Composition: (a * b) maps p the way a(b(p)) does.
  friend Homography operator*(const Homography& a, const Homography& b) {
    return from_values(detail::mat3_mul(a.m_, b.m_));
  }

  friend bool operator==(const Homography&, const Homography&) = default;

 private:
  detail::Mat3 m_{1, 0, 0, 0, 1, 0, 0, 0, 1};
};

/// Projective application with division by the homogeneous coordinate.
inline Point2 apply_homography(const Homography& h, Point2 p) {
  const double w = h.at(2, 0) * p.x + h.at(2, 1) * p.y + h.at(2, 2);
  if (std::abs(w) < 1e-12) {
    throw GeometryError("point at infinity under homography");
  }
  return Point2{(h.at(0, 0) * p.x + h.at(0, 1) * p.y + h.at(0, 2)) / w,
                (h.at(1, 0) * p.x + h.at(1, 1) * p.y + h.at(1, 2)) / w};
}

namespace detail {

struct PointNormalization {
  Mat3 transform;          // similarity taking raw points to conditioned ones
  std::array<Point2, 4> points;
};

// Shift to the centroid and scale so the mean distance from it is sqrt(2).
inline PointNormalization condition_points(const std::array<Point2, 4>& pts) {
  Point2 centroid{};
  for (const auto& p : pts) {
    centroid.x += p.x / 4.0;
    centroid.y += p.y / 4.0;
  }
  double mean_dist = 0.0;
  for (const auto& p : pts) {
    mean_dist += std::hypot(p.x - centroid.x, p.y - centroid.y) / 4.0;
  }
  if (mean_dist < 1e-12) {
    throw GeometryError("degenerate correspondences: coincident points");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  PointNormalization out;
  out.transform = Mat3{s, 0, -s * centroid.x, 0, s, -s * centroid.y, 0, 0, 1};
  for (int i = 0; i < 4; ++i) {
    out.points[i] = Point2{s * (pts[i].x - centroid.x),
                           s * (pts[i].y - centroid.y)};
  }
  return out;
}

// Gaussian elimination with partial pivoting on an n x (n+1) augmented system.
template <int N>
inline std::array<double, N> solve_linear(
    std::array<std::array<double, N + 1>, N>& a) {
  for (int col = 0; col < N; ++col) {
    int pivot = col;
    for (int r = col + 1; r < N; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-10) {
      throw GeometryError("degenerate correspondences: singular system");
    }
    std::swap(a[col], a[pivot]);
    for (int r = 0; r < N; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c <= N; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::array<double, N> x{};
  for (int i = 0; i < N; ++i) x[i] = a[i][N] / a[i][i];
  return x;
}

}  // namespace detail

/// Direct linear transform for the homography taking each src point to its
/// dst point. Points are conditioned (centroid shift + sqrt(2) scaling)
/// before solving the 8-unknown system.
inline Homography solve_homography(const std::array<Point2, 4>& src,
                                   const std::array<Point2, 4>& dst) {
  const auto ns = detail::condition_points(src);
  const auto nd = detail::condition_points(dst);

  std::array<std::array<double, 9>, 8> sys{};
  for (int i = 0; i < 4; ++i) {
    const auto [x, y] = ns.points[i];
    const auto [u, v] = nd.points[i];
    sys[2 * i + 0] = {x, y, 1, 0, 0, 0, -u * x, -u * y, u};
    sys[2 * i + 1] = {0, 0, 0, x, y, 1, -v * x, -v * y, v};
  }
  const auto h = detail::solve_linear<8>(sys);
  const detail::Mat3 hn{h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0};

  // Undo the conditioning: H = T_dst^-1 * Hn * T_src.
  const double sd = nd.transform[0];
  const detail::Mat3 t_dst_inv{1.0 / sd, 0, -nd.transform[2] / sd,
                               0, 1.0 / sd, -nd.transform[5] / sd,
                               0, 0, 1};
  return Homography::from_values(
      detail::mat3_mul(t_dst_inv, detail::mat3_mul(hn, ns.transform)));
}

}  // namespace platekit
