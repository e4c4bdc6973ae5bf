#include <cmath>

#include "homsusp/error.hpp"
#include "homsusp/geometry.hpp"
#include "homsusp/quadrature.hpp"

namespace homsusp {

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Disk: return "disk";
    case ShapeKind::Ellipse: return "ellipse";
    case ShapeKind::RoundedSquare: return "rounded-square";
  }
  return "unknown";
}

ShapeKind shape_kind_from_string(const std::string& name) {
  if (name == "disk") return ShapeKind::Disk;
  if (name == "ellipse") return ShapeKind::Ellipse;
  if (name == "rounded-square" || name == "rounded_square") return ShapeKind::RoundedSquare;
  fail(ErrorCode::InvalidArgument, "unknown shape kind '" + name + "'");
}

InclusionShape InclusionShape::disk(double phi) {
  InclusionShape s;
  s.kind = ShapeKind::Disk;
  s.phi = phi;
  return s;
}

InclusionShape InclusionShape::ellipse(double phi, double aspect) {
  InclusionShape s;
  s.kind = ShapeKind::Ellipse;
  s.phi = phi;
  s.aspect = aspect;
  return s;
}

InclusionShape InclusionShape::rounded_square(double phi, double corner) {
  InclusionShape s;
  s.kind = ShapeKind::RoundedSquare;
  s.phi = phi;
  s.corner = corner;
  return s;
}

double InclusionShape::size() const {
  switch (kind) {
    case ShapeKind::Disk: return std::sqrt(phi / kPi);
    case ShapeKind::Ellipse: return std::sqrt(phi / (kPi * aspect));
    case ShapeKind::RoundedSquare:
      return std::sqrt(phi / (4.0 - (4.0 - kPi) * corner * corner));
  }
  return 0.0;
}

namespace {

// Radial function of the rounded square and its derivative on the octant
// u in [0, pi/4], for half side s and corner radius rho.
void rounded_square_octant(double s, double rho, double u, double& r, double& dr) {
  const double c = std::cos(u), sn = std::sin(u);
  if (s * sn <= (s - rho) * c) {
    r = s / c;
    dr = s * sn / (c * c);
    return;
  }
  const double k = s - rho;
  const double p = k * (c + sn);
  const double dp = k * (c - sn);
  const double q = 2.0 * k * k - rho * rho;
  const double root = std::sqrt(std::max(p * p - q, 0.0));
  r = p + root;
  dr = root > 0.0 ? dp + p * dp / root : dp;
}

void rounded_square_radial(double s, double rho, double t, double& r, double& dr) {
  const double quarter = 0.5 * kPi;
  double u = std::fmod(t, quarter);
  if (u < 0.0) u += quarter;
  double sign = 1.0;
  if (u > 0.25 * kPi) {
    u = quarter - u;
    sign = -1.0;
  }
  rounded_square_octant(s, rho, u, r, dr);
  dr *= sign;
}

}  // namespace

double InclusionShape::radius(double t) const {
  if (empty()) return 0.0;
  switch (kind) {
    case ShapeKind::Disk: return size();
    case ShapeKind::Ellipse: {
      const double a = size(), b = a * aspect;
      const double bc = b * std::cos(t), as = a * std::sin(t);
      return a * b / std::sqrt(bc * bc + as * as);
    }
    case ShapeKind::RoundedSquare: {
      double r, dr;
      rounded_square_radial(size(), corner * size(), t, r, dr);
      return r;
    }
  }
  return 0.0;
}

double InclusionShape::radius_derivative(double t) const {
  if (empty()) return 0.0;
  switch (kind) {
    case ShapeKind::Disk: return 0.0;
    case ShapeKind::Ellipse: {
      const double a = size(), b = a * aspect;
      const double c = std::cos(t), s = std::sin(t);
      const double d = b * b * c * c + a * a * s * s;
      return -a * b * (a * a - b * b) * s * c / (d * std::sqrt(d));
    }
    case ShapeKind::RoundedSquare: {
      double r, dr;
      rounded_square_radial(size(), corner * size(), t, r, dr);
      return dr;
    }
  }
  return 0.0;
}

Vec2 InclusionShape::point(double t) const {
  const double r = radius(t);
  return {r * std::cos(t), r * std::sin(t)};
}

double InclusionShape::speed(double t) const {
  const double r = radius(t), dr = radius_derivative(t);
  return std::sqrt(r * r + dr * dr);
}

double InclusionShape::extent() const {
  if (empty()) return 0.0;
  switch (kind) {
    case ShapeKind::Disk: return size();
    case ShapeKind::Ellipse: return size() * std::max(1.0, aspect);
    case ShapeKind::RoundedSquare: return size();
  }
  return 0.0;
}

double InclusionShape::perimeter() const {
  if (empty()) return 0.0;
  switch (kind) {
    case ShapeKind::Disk: return 2.0 * kPi * size();
    case ShapeKind::RoundedSquare: {
      const double s = size(), rho = corner * s;
      return 8.0 * (s - rho) + 2.0 * kPi * rho;
    }
    case ShapeKind::Ellipse: {
      const LineRule& g = gauss_legendre(16);
      const int panels = 64;
      const double dt = 2.0 * kPi / panels;
      double sum = 0.0;
      for (int p = 0; p < panels; ++p)
        for (std::size_t q = 0; q < g.x.size(); ++q)
          sum += g.w[q] * dt * speed((p + g.x[q]) * dt);
      return sum;
    }
  }
  return 0.0;
}

void InclusionShape::validate() const {
  require(std::isfinite(phi) && phi >= 0.0 && phi < 1.0, ErrorCode::InvalidArgument,
          "volume fraction must lie in [0, 1)");
  require(std::isfinite(delta_min) && delta_min >= 0.0 && delta_min < 0.5,
          ErrorCode::InvalidArgument, "delta_min must lie in [0, 0.5)");
  if (kind == ShapeKind::Ellipse)
    require(std::isfinite(aspect) && aspect > 0.0, ErrorCode::InvalidArgument,
            "ellipse aspect must be positive");
  if (kind == ShapeKind::RoundedSquare)
    require(corner >= 0.0 && corner <= 1.0, ErrorCode::InvalidArgument,
            "corner ratio must lie in [0, 1]");
  if (empty()) return;
  const double gap = 0.5 - extent();
  if (gap < delta_min)
    fail(ErrorCode::ShapeTouchesBoundary,
         "gap between inclusion and cell boundary is " + std::to_string(gap) +
             " < delta_min = " + std::to_string(delta_min));
}

}  // namespace homsusp
