#pragma once

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace homsusp {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
/// Symmetric 2x2 matrix in orthonormal Mandel coordinates (a11, a22, sqrt2*a12).
using Mandel = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;

inline Mandel to_mandel(const Mat2& a) {
  return {a(0, 0), a(1, 1), kSqrt2 * 0.5 * (a(0, 1) + a(1, 0))};
}

inline Mat2 from_mandel(const Mandel& m) {
  Mat2 a;
  a << m(0), m(2) / kSqrt2, m(2) / kSqrt2, m(1);
  return a;
}

inline double frobenius(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

inline bool is_symmetric(const Mat2& a, double tol = 1e-14) {
  return std::abs(a(0, 1) - a(1, 0)) <= tol * (1.0 + a.norm());
}

/// Orthonormal basis of trace-free symmetric 2x2 matrices:
/// {(E11 - E22)/sqrt2, sqrt2 * E12} with E12 = (e1 (x) e2 + e2 (x) e1)/2.
std::vector<Mat2> deviatoric_basis();

/// Coordinates of the deviatoric part of `a` in `deviatoric_basis()`.
Eigen::Vector2d deviatoric_coordinates(const Mat2& a);

/// Maps Mandel coordinates to deviatoric-basis coordinates (2x3).
Eigen::Matrix<double, 2, 3> mandel_to_deviatoric();

/// Index of a periodicity cell in Z^2.
struct LatticeIndex {
  long x = 0;
  long y = 0;
  friend bool operator==(const LatticeIndex&, const LatticeIndex&) = default;
  friend auto operator<=>(const LatticeIndex&, const LatticeIndex&) = default;
};

/// Velocity of a planar rigid motion M (x - c) + m with M skew.
struct RigidMotion {
  double spin = 0.0;  // M = [[0, -spin], [spin, 0]]
  Vec2 translation = Vec2::Zero();
  Vec2 center = Vec2::Zero();

  Mat2 skew() const {
    Mat2 m;
    m << 0.0, -spin, spin, 0.0;
    return m;
  }
  Vec2 operator()(const Vec2& x) const {
    const Vec2 r = x - center;
    return translation + Vec2(-spin * r.y(), spin * r.x());
  }
};

}  // namespace homsusp
