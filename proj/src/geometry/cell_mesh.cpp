#include <algorithm>
#include <cmath>

#include "homsusp/error.hpp"
#include "homsusp/geometry.hpp"

namespace homsusp {

namespace {

int segments_for(double h) {
  require(h > 0.0 && h < 0.5, ErrorCode::InvalidArgument, "cell mesh size must lie in (0, 0.5)");
  return std::max(2, static_cast<int>(std::ceil(1.0 / h - 1e-9)));
}

Vec2 rotate90(const Vec2& p, int times) {
  Vec2 q = p;
  for (int k = 0; k < (times & 3); ++k) q = Vec2(-q.y(), q.x());
  return q;
}

bool quarter_symmetric(const InclusionShape& shape) {
  return shape.kind == ShapeKind::Disk || shape.kind == ShapeKind::RoundedSquare ||
         (shape.kind == ShapeKind::Ellipse && shape.aspect == 1.0);
}

// Fractions tau_0 = 0 < ... < tau_L = 1 of the ray from the inclusion to the
// cell boundary at which the ring layers sit.
std::vector<double> radial_layers(double gap, double first, double h, const CellMeshOptions& opt) {
  std::vector<double> steps;
  if (opt.grading == RadialGrading::Uniform) {
    const int layers = std::max(1, static_cast<int>(std::ceil(gap / h - 1e-9)));
    steps.assign(layers, 1.0);
  } else {
    require(opt.growth >= 1.0, ErrorCode::InvalidArgument, "radial growth must be >= 1");
    double d = std::min(first, h), sum = 0.0;
    while (sum < gap * (1.0 - 1e-9)) {
      steps.push_back(d);
      sum += d;
      d = std::min(d * opt.growth, h);
    }
    // Drop a thin last layer; the rescaling below absorbs it.
    if (steps.size() >= 2 && sum - gap > 0.5 * steps.back()) {
      steps.pop_back();
    }
  }
  std::vector<double> tau(steps.size() + 1, 0.0);
  double total = 0.0;
  for (double s : steps) total += s;
  for (std::size_t j = 0; j < steps.size(); ++j) tau[j + 1] = tau[j] + steps[j] / total;
  tau.back() = 1.0;
  return tau;
}

void check_orientation(const Mesh& mesh) {
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (!(mesh.signed_area(t) > 0.0))
      fail(ErrorCode::MeshGenFailure,
           "cell mesh has an inverted or degenerate triangle (" + std::to_string(t) + ")");
}

}  // namespace

CellMesh build_cell_mesh(const InclusionShape& shape, double h, const CellMeshOptions& options) {
  shape.validate();
  const int m = segments_for(h);
  CellMesh mesh;
  mesh.shape = shape;
  mesh.h = h;
  mesh.segments = m;

  if (shape.empty()) {
    static_cast<Mesh&>(mesh) = criss_cross({-0.5, -0.5}, {0.5, 0.5}, m, m);
    check_orientation(mesh);
    return mesh;
  }

  const int n = 4 * m;
  std::vector<Vec2> square(n), curve(n);
  std::vector<double> param(n);
  for (int i = 0; i < n; ++i) {
    const int side = i / m, l = i % m;
    // Exact dyadic-friendly coordinates so that opposite faces match bitwise.
    square[i] = rotate90(Vec2(0.5, static_cast<double>(2 * l - m) / (2.0 * m)), side);
    param[i] = -0.25 * kPi + 2.0 * kPi * i / n;
  }
  const bool symmetric = quarter_symmetric(shape);
  for (int i = 0; i < n; ++i) {
    curve[i] = (symmetric && i >= m) ? rotate90(curve[i % m], i / m) : shape.point(param[i]);
  }

  double gap = 0.0;
  for (int i = 0; i < n; ++i) gap += (square[i] - curve[i]).norm();
  gap /= n;
  const double spacing = shape.perimeter() / n;
  const std::vector<double> tau = radial_layers(gap, spacing, h, options);
  const int layers = static_cast<int>(tau.size()) - 1;

  mesh.vertices.reserve(static_cast<std::size_t>(n) * (layers + 1) + 1);
  for (int j = 0; j <= layers; ++j)
    for (int i = 0; i < n; ++i) {
      if (j == 0) mesh.vertices.push_back(curve[i]);
      else if (j == layers) mesh.vertices.push_back(square[i]);
      else mesh.vertices.push_back((1.0 - tau[j]) * curve[i] + tau[j] * square[i]);
    }
  const int center = static_cast<int>(mesh.vertices.size());
  mesh.vertices.emplace_back(0.0, 0.0);

  // Diagonals are mirrored about the middle of each side so the mesh has the
  // full symmetry group of the square when m is even. The first triangle of
  // every quad holds the edge (P_ij, P_i+1,j).
  auto vid = [n](int i, int j) { return j * n + (i % n); };
  for (int j = 0; j < layers; ++j)
    for (int i = 0; i < n; ++i) {
      const int p00 = vid(i, j), p10 = vid(i + 1, j), p11 = vid(i + 1, j + 1), p01 = vid(i, j + 1);
      if (2 * (i % m) < m) {
        mesh.triangles.push_back({p00, p11, p10});
        mesh.triangles.push_back({p00, p01, p11});
      } else {
        mesh.triangles.push_back({p00, p01, p10});
        mesh.triangles.push_back({p10, p01, p11});
      }
      mesh.region.push_back(Region::Fluid);
      mesh.region.push_back(Region::Fluid);
    }

  for (int i = 0; i < n; ++i) {
    mesh.triangles.push_back({center, vid(i, 0), vid(i + 1, 0)});
    mesh.region.push_back(Region::Rigid);
  }

  mesh.facets.reserve(n);
  for (int i = 0; i < n; ++i) {
    InterfaceFacet f;
    f.a = vid(i, 0);
    f.b = vid(i + 1, 0);
    f.t0 = param[i];
    f.t1 = param[i] + 2.0 * kPi / n;
    f.fluid_triangle = 2 * i;
    f.particle = 0;
    mesh.facets.push_back(f);
  }

  check_orientation(mesh);
  return mesh;
}

}  // namespace homsusp
