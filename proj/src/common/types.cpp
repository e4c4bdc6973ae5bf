#include "homsusp/types.hpp"

namespace homsusp {

std::vector<Mat2> deviatoric_basis() {
  Mat2 e0, e1;
  e0 << 1.0 / kSqrt2, 0.0, 0.0, -1.0 / kSqrt2;
  e1 << 0.0, 1.0 / kSqrt2, 1.0 / kSqrt2, 0.0;
  return {e0, e1};
}

Eigen::Vector2d deviatoric_coordinates(const Mat2& a) {
  const auto basis = deviatoric_basis();
  return {frobenius(a, basis[0]), frobenius(a, basis[1])};
}

Eigen::Matrix<double, 2, 3> mandel_to_deviatoric() {
  // Rows are the Mandel vectors of the deviatoric basis.
  Eigen::Matrix<double, 2, 3> p;
  p << 1.0 / kSqrt2, -1.0 / kSqrt2, 0.0, 0.0, 0.0, 1.0;
  return p;
}

}  // namespace homsusp
