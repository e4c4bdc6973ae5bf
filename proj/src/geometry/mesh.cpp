#include <algorithm>
#include <cmath>
#include <limits>

#include "homsusp/error.hpp"
#include "homsusp/geometry.hpp"

namespace homsusp {

double Mesh::signed_area(int t) const {
  const auto& tri = triangles[t];
  const Vec2 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Vec2 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

double Mesh::measure(Region r) const {
  double sum = 0.0;
  for (int t = 0; t < num_triangles(); ++t)
    if (region[t] == r) sum += area(t);
  return sum;
}

double Mesh::max_edge() const {
  double h = 0.0;
  for (const auto& tri : triangles)
    for (int k = 0; k < 3; ++k)
      h = std::max(h, (vertices[tri[k]] - vertices[tri[(k + 1) % 3]]).norm());
  return h;
}

double Box::diameter() const {
  const double wx = (hi[0] - lo[0]).to_double(), wy = (hi[1] - lo[1]).to_double();
  return std::sqrt(wx * wx + wy * wy);
}

bool Box::contains(const Vec2& x, double tol) const {
  return x.x() >= lo_d(0) - tol && x.x() <= hi_d(0) + tol && x.y() >= lo_d(1) - tol &&
         x.y() <= hi_d(1) + tol;
}

Mesh criss_cross(const Vec2& lo, const Vec2& hi, int nx, int ny) {
  require(nx >= 1 && ny >= 1, ErrorCode::InvalidArgument, "criss-cross grid needs nx, ny >= 1");
  Mesh mesh;
  const int nv = (nx + 1) * (ny + 1);
  mesh.vertices.reserve(nv + nx * ny);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      // Endpoints are taken verbatim so neighbouring blocks share exact coordinates.
      const double x = i == nx ? hi.x() : lo.x() + (hi.x() - lo.x()) * i / nx;
      const double y = j == ny ? hi.y() : lo.y() + (hi.y() - lo.y()) * j / ny;
      mesh.vertices.emplace_back(x, y);
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Vec2 c = 0.25 * (mesh.vertices[j * (nx + 1) + i] + mesh.vertices[j * (nx + 1) + i + 1] +
                             mesh.vertices[(j + 1) * (nx + 1) + i] +
                             mesh.vertices[(j + 1) * (nx + 1) + i + 1]);
      mesh.vertices.push_back(c);
    }
  mesh.triangles.reserve(4 * nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int v00 = j * (nx + 1) + i, v10 = v00 + 1;
      const int v01 = v00 + nx + 1, v11 = v01 + 1;
      const int c = nv + j * nx + i;
      mesh.triangles.push_back({v00, v10, c});
      mesh.triangles.push_back({v10, v11, c});
      mesh.triangles.push_back({v11, v01, c});
      mesh.triangles.push_back({v01, v00, c});
    }
  mesh.region.assign(mesh.triangles.size(), Region::Fluid);
  return mesh;
}

MacroMesh build_macro_mesh(const Box& domain, double h) {
  require(h > 0.0, ErrorCode::InvalidArgument, "macro mesh size must be positive");
  const double wx = (domain.hi[0] - domain.lo[0]).to_double();
  const double wy = (domain.hi[1] - domain.lo[1]).to_double();
  require(wx > 0.0 && wy > 0.0, ErrorCode::InvalidArgument, "empty domain box");
  MacroMesh mesh;
  mesh.domain = domain;
  mesh.nx = std::max(1, static_cast<int>(std::ceil(wx / h - 1e-9)));
  mesh.ny = std::max(1, static_cast<int>(std::ceil(wy / h - 1e-9)));
  static_cast<Mesh&>(mesh) = criss_cross({domain.lo_d(0), domain.lo_d(1)},
                                         {domain.hi_d(0), domain.hi_d(1)}, mesh.nx, mesh.ny);
  return mesh;
}

Eigen::Vector3d barycentric(const Mesh& mesh, int t, const Vec2& x) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.vertices[tri[0]];
  const Vec2& b = mesh.vertices[tri[1]];
  const Vec2& c = mesh.vertices[tri[2]];
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  const double l1 = ((x.x() - a.x()) * (c.y() - a.y()) - (x.y() - a.y()) * (c.x() - a.x())) / det;
  const double l2 = ((b.x() - a.x()) * (x.y() - a.y()) - (b.y() - a.y()) * (x.x() - a.x())) / det;
  return {1.0 - l1 - l2, l1, l2};
}

Location locate_structured(const MacroMesh& mesh, const Vec2& x) {
  const double x0 = mesh.domain.lo_d(0), y0 = mesh.domain.lo_d(1);
  const double dx = (mesh.domain.hi_d(0) - x0) / mesh.nx;
  const double dy = (mesh.domain.hi_d(1) - y0) / mesh.ny;
  const double fx = (x.x() - x0) / dx, fy = (x.y() - y0) / dy;
  const double tol = 1e-10;
  if (fx < -tol || fy < -tol || fx > mesh.nx + tol || fy > mesh.ny + tol) return {};
  const int i = std::clamp(static_cast<int>(std::floor(fx)), 0, mesh.nx - 1);
  const int j = std::clamp(static_cast<int>(std::floor(fy)), 0, mesh.ny - 1);
  const double xi = fx - i, eta = fy - j;
  int q;
  if (eta <= xi && eta <= 1.0 - xi) q = 0;
  else if (xi >= eta && xi >= 1.0 - eta) q = 1;
  else if (eta >= xi && eta >= 1.0 - xi) q = 2;
  else q = 3;
  Location loc;
  loc.triangle = 4 * (j * mesh.nx + i) + q;
  loc.bary = barycentric(mesh, loc.triangle, x);
  return loc;
}

Locator::Locator(const Mesh& mesh, int buckets_per_side) : mesh_(&mesh) {
  lo_ = Vec2::Constant(std::numeric_limits<double>::max());
  hi_ = Vec2::Constant(std::numeric_limits<double>::lowest());
  for (const auto& v : mesh.vertices) {
    lo_ = lo_.cwiseMin(v);
    hi_ = hi_.cwiseMax(v);
  }
  n_ = buckets_per_side > 0
           ? buckets_per_side
           : std::max(1, static_cast<int>(std::sqrt(mesh.num_triangles() / 2.0)));
  const Vec2 pad = 1e-9 * (hi_ - lo_ + Vec2::Ones());
  lo_ -= pad;
  hi_ += pad;
  buckets_.assign(static_cast<std::size_t>(n_) * n_, {});
  const Vec2 size = hi_ - lo_;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    Vec2 a = mesh.vertices[mesh.triangles[t][0]], b = a;
    for (int k = 1; k < 3; ++k) {
      a = a.cwiseMin(mesh.vertices[mesh.triangles[t][k]]);
      b = b.cwiseMax(mesh.vertices[mesh.triangles[t][k]]);
    }
    const int i0 = std::clamp(static_cast<int>((a.x() - lo_.x()) / size.x() * n_), 0, n_ - 1);
    const int i1 = std::clamp(static_cast<int>((b.x() - lo_.x()) / size.x() * n_), 0, n_ - 1);
    const int j0 = std::clamp(static_cast<int>((a.y() - lo_.y()) / size.y() * n_), 0, n_ - 1);
    const int j1 = std::clamp(static_cast<int>((b.y() - lo_.y()) / size.y() * n_), 0, n_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j) * n_ + i].push_back(t);
  }
}

Location Locator::locate(const Vec2& x, double tol) const {
  const Vec2 size = hi_ - lo_;
  const int i = static_cast<int>(std::floor((x.x() - lo_.x()) / size.x() * n_));
  const int j = static_cast<int>(std::floor((x.y() - lo_.y()) / size.y() * n_));
  if (i < 0 || j < 0 || i >= n_ || j >= n_) return {};
  Location best;
  double best_min = -std::numeric_limits<double>::max();
  for (int t : buckets_[static_cast<std::size_t>(j) * n_ + i]) {
    const Eigen::Vector3d l = barycentric(*mesh_, t, x);
    const double m = l.minCoeff();
    if (m > best_min) {
      best_min = m;
      best.triangle = t;
      best.bary = l;
    }
  }
  if (best_min < -tol) return {};
  return best;
}

}  // namespace homsusp
