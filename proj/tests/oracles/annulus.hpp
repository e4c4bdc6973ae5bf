#pragma once

#include <cmath>

#include <Eigen/Dense>

// Cell model for a dilute suspension of disks: a rigid disk of radius a at rest
// in a concentric fluid disk of radius R (pi R^2 = 1, phi = a^2 / R^2), with the
// pure straining velocity A x imposed on r = R.  The stream function is
// psi = f(r) cos(2 theta) with f = c0 r^4 + c1 r^2 + c2 + c3 / r^2.
// Returns mu*/mu - 1 = (integral of e(U):e(U) over the annulus) / (A:A pi R^2) - 1.
namespace oracle {

inline double annulus_viscosity_excess(double phi) {
  const double pi = std::acos(-1.0);
  const double R = 1.0 / std::sqrt(pi);
  const double a = std::sqrt(phi) * R;
  const double s = 1.0;  // A = [[0, s], [s, 0]], so A x = (s y, s x)
  auto row_f = [](double r) { return Eigen::RowVector4d(r * r * r * r, r * r, 1.0, 1.0 / (r * r)); };
  auto row_df = [](double r) { return Eigen::RowVector4d(4 * r * r * r, 2 * r, 0.0, -2.0 / (r * r * r)); };
  Eigen::Matrix4d M;
  M << row_f(a), row_df(a), row_f(R), row_df(R);
  const Eigen::Vector4d rhs(0.0, 0.0, -s * R * R / 2, -s * R);
  const Eigen::Vector4d c = M.fullPivLu().solve(rhs);
  auto integrand = [&](double r) {
    const double f = c(0) * std::pow(r, 4) + c(1) * r * r + c(2) + c(3) / (r * r);
    const double f1 = 4 * c(0) * std::pow(r, 3) + 2 * c(1) * r - 2 * c(3) / std::pow(r, 3);
    const double f2 = 12 * c(0) * r * r + 2 * c(1) + 6 * c(3) / std::pow(r, 4);
    const double err = f1 / r - f / (r * r);           // e_rr = -2 err sin 2t
    const double ert = 0.5 * (-f2 + f1 / r - 4 * f / (r * r));  // e_rt = ert cos 2t
    // e:e = e_rr^2 + e_tt^2 + 2 e_rt^2 with e_tt = -e_rr, integrated over theta
    return (8 * err * err * pi + 2 * ert * ert * pi) * r;
  };
  // composite Simpson rule in log r
  const int n = 20000;
  const double x0 = std::log(a), h = (std::log(R) - x0) / n;
  auto g = [&](double x) { return integrand(std::exp(x)) * std::exp(x); };
  double sum = g(x0) + g(x0 + n * h);
  for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * g(x0 + i * h);
  const double dissipation = sum * h / 3.0;
  return dissipation / (2 * s * s * pi * R * R) - 1.0;
}

// d(mu*/mu)/d phi at phi = 0: the single-disk limit, by linear extrapolation in phi.
inline double dilute_slope() {
  const double p = 1e-4;
  return 2.0 * annulus_viscosity_excess(p) / p - annulus_viscosity_excess(2 * p) / (2 * p);
}

}  // namespace oracle
