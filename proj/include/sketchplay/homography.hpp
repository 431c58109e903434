#pragma once

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sketchplay/error.hpp"
#include "sketchplay/geometry.hpp"

namespace sketchplay {

/// 3x3 projective map stored row-major and normalized so that h33 = 1.
/// Affine maps are the special case with a (0, 0, 1) bottom row.
class Homography {
 public:
  Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

  /// Normalizes by h33. Throws if h33 vanishes or the result is singular.
  explicit Homography(const std::array<double, 9>& row_major) : m_(row_major) {
    for (double v : m_)
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, "homography has non-finite entries");
    if (std::abs(m_[8]) < 1e-15)
      throw Error(ErrorCode::InvalidInput, "homography h33 is zero; cannot normalize");
    const double s = m_[8];
    for (double& v : m_) v /= s;
    m_[8] = 1.0;
    if (std::abs(determinant()) <= 1e-12)
      throw Error(ErrorCode::InvalidInput, "homography is not invertible");
  }

  static Homography identity() { return {}; }
  static Homography translation(double tx, double ty) {
    return Homography({1, 0, tx, 0, 1, ty, 0, 0, 1});
  }
  static Homography scaling(double sx, double sy) {
    return Homography({sx, 0, 0, 0, sy, 0, 0, 0, 1});
  }
  static Homography affine(double a, double b, double tx, double c, double d, double ty) {
    return Homography({a, b, tx, c, d, ty, 0, 0, 1});
  }
  static Homography from_eigen(const Eigen::Matrix3d& m) {
    std::array<double, 9> a{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) a[static_cast<std::size_t>(r * 3 + c)] = m(r, c);
    return Homography(a);
  }

  Eigen::Matrix3d to_eigen() const {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = m_[static_cast<std::size_t>(r * 3 + c)];
    return m;
  }

  const std::array<double, 9>& row_major() const { return m_; }
  double operator()(int r, int c) const { return m_[static_cast<std::size_t>(r * 3 + c)]; }

  double determinant() const { return to_eigen().determinant(); }

  bool is_affine() const { return m_[6] == 0.0 && m_[7] == 0.0; }

  Homography inverse() const { return from_eigen(to_eigen().inverse()); }

  /// `this` applied after `first`.
  Homography after(const Homography& first) const {
    return from_eigen(to_eigen() * first.to_eigen());
  }

  friend bool operator==(const Homography&, const Homography&) = default;

 private:
  std::array<double, 9> m_;
};

/// Projective application with perspective divide.
inline Point map_point(const Homography& h, Point p) {
  if (!is_finite(p)) throw Error(ErrorCode::InvalidInput, "cannot map a non-finite point");
  const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
  if (std::abs(w) < 1e-12)
    throw Error(ErrorCode::PointAtInfinity, "point maps to infinity",
                "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
  return {(h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2)) / w,
          (h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)) / w};
}

}  // namespace sketchplay
