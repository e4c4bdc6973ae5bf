#pragma once

#include <vector>

#include <Eigen/Dense>

namespace homsusp {

/// Gauss-Legendre rule on [0, 1].
struct LineRule {
  std::vector<double> x;
  std::vector<double> w;
};

const LineRule& gauss_legendre(int n);

/// Rule on a triangle in barycentric coordinates; weights sum to 1, so an
/// integral is area * sum_q w_q f(x_q).
struct TriangleRule {
  std::vector<Eigen::Vector3d> bary;
  std::vector<double> w;
  int degree = 0;
  int size() const { return static_cast<int>(w.size()); }
};

/// Seven-point symmetric rule exact for degree 5.
const TriangleRule& triangle_rule_deg5();
/// Collapsed (Duffy) tensor Gauss rule with n x n points, exact for degree 2n - 2.
const TriangleRule& triangle_rule_collapsed(int n);

}  // namespace homsusp
