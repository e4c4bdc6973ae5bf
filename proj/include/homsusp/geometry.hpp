#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "homsusp/rational.hpp"
#include "homsusp/types.hpp"

namespace homsusp {

enum class ShapeKind { Disk, Ellipse, RoundedSquare };

std::string_view to_string(ShapeKind kind);
ShapeKind shape_kind_from_string(const std::string& name);

/// Star-shaped inclusion T centered at the origin of Y = (-1/2, 1/2)^2,
/// parametrized by polar angle t through its radial function R(t).
struct InclusionShape {
  ShapeKind kind = ShapeKind::Disk;
  double phi = 0.1;
  double aspect = 1.0;   // ellipse: b / a
  double corner = 0.5;   // rounded square: corner radius / half side
  double delta_min = 0.05;

  static InclusionShape disk(double phi);
  static InclusionShape ellipse(double phi, double aspect);
  static InclusionShape rounded_square(double phi, double corner);

  bool empty() const { return phi == 0.0; }

  /// Disk radius, ellipse semi-axis along x, or half side of the square.
  double size() const;
  double radius(double t) const;
  double radius_derivative(double t) const;
  Vec2 point(double t) const;
  /// |d point / dt|, the arclength density of the parametrization.
  double speed(double t) const;
  /// max |x|_inf over the closure of T.
  double extent() const;
  double perimeter() const;

  /// Throws ShapeTouchesBoundary or InvalidArgument.
  void validate() const;
};

enum class Region : std::uint8_t { Fluid = 0, Rigid = 1 };

struct Mesh {
  Mesh() = default;
  Mesh(const Mesh&) = default;
  Mesh(Mesh&&) = default;
  Mesh& operator=(const Mesh&) = default;
  Mesh& operator=(Mesh&&) = default;
  virtual ~Mesh() = default;

  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Region> region;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  double signed_area(int t) const;
  double area(int t) const { return std::abs(signed_area(t)); }
  double measure(Region r) const;
  double max_edge() const;
};

/// Straight facet of the discrete interface, tagged with the polar parameter
/// interval of the exact curve it interpolates.
struct InterfaceFacet {
  int a = -1;
  int b = -1;
  double t0 = 0.0;
  double t1 = 0.0;
  int fluid_triangle = -1;
  int particle = 0;
};

struct CellMesh : Mesh {
  InclusionShape shape;
  double h = 0.0;
  int segments = 0;  // boundary segments per side of Y
  std::vector<InterfaceFacet> facets;
};

enum class RadialGrading { Geometric, Uniform };

struct CellMeshOptions {
  RadialGrading grading = RadialGrading::Geometric;
  double growth = 1.3;
};

CellMesh build_cell_mesh(const InclusionShape& shape, double h, const CellMeshOptions& options = {});

/// Identification of points on opposite faces of Y. Faces x = -1/2 and
/// y = -1/2 hold the masters; every other point is its own master.
struct PeriodicPairing {
  std::vector<int> master;
  int slaves = 0;
  /// One mean-zero constraint per velocity component for the quotient by constants.
  int mean_constraints = 2;
};

PeriodicPairing periodic_pairing(std::span<const Vec2> points, double tol = 1e-12);
PeriodicPairing periodic_dof_map(const Mesh& mesh, double tol = 1e-12);

struct Box {
  std::array<Rational, 2> lo{Rational(0), Rational(0)};
  std::array<Rational, 2> hi{Rational(1), Rational(1)};

  double lo_d(int i) const { return lo[i].to_double(); }
  double hi_d(int i) const { return hi[i].to_double(); }
  double volume() const { return (hi[0] - lo[0]).to_double() * (hi[1] - lo[1]).to_double(); }
  double diameter() const;
  bool contains(const Vec2& x, double tol = 0.0) const;
};

/// k in Z^2 with eps (k + Y) strictly inside the box, in lexicographic (x, y) order.
std::vector<LatticeIndex> enumerate_lattice(const Box& domain, const Rational& eps);

struct PerforatedMesh : Mesh {
  Box domain;
  Rational eps;
  CellMesh cell;
  std::vector<LatticeIndex> particles;
  std::vector<Vec2> centers;
  std::vector<int> particle_of;       // per triangle, -1 outside every cell
  std::vector<int> source_triangle;   // per triangle, cell-mesh triangle or -1
  std::vector<std::vector<int>> cell_vertex_map;  // per particle: cell vertex -> global vertex
  std::vector<InterfaceFacet> facets;  // parameters in cell coordinates
};

PerforatedMesh build_perforated_mesh(const Box& domain, const InclusionShape& shape,
                                     const Rational& eps, double h_per_cell,
                                     const CellMeshOptions& options = {});

/// Criss-cross structured triangulation of a box (four triangles per square).
struct MacroMesh : Mesh {
  Box domain;
  int nx = 0;
  int ny = 0;
};

MacroMesh build_macro_mesh(const Box& domain, double h);
/// Same triangulation pattern on an arbitrary rectangle, used for border blocks.
Mesh criss_cross(const Vec2& lo, const Vec2& hi, int nx, int ny);

struct Location {
  int triangle = -1;
  Eigen::Vector3d bary = Eigen::Vector3d::Zero();
  bool found() const { return triangle >= 0; }
};

Eigen::Vector3d barycentric(const Mesh& mesh, int t, const Vec2& x);

/// Point location by uniform bucket grid over the triangle bounding boxes.
class Locator {
 public:
  explicit Locator(const Mesh& mesh, int buckets_per_side = 0);
  Location locate(const Vec2& x, double tol = 1e-10) const;

 private:
  const Mesh* mesh_;
  Vec2 lo_, hi_;
  int n_ = 1;
  std::vector<std::vector<int>> buckets_;
};

/// O(1) location on a criss-cross macro mesh.
Location locate_structured(const MacroMesh& mesh, const Vec2& x);

void write_mesh_json(const Mesh& mesh, const std::string& path,
                     const PeriodicPairing* pairing = nullptr);
void write_mesh_vtk(const Mesh& mesh, const std::string& path);

}  // namespace homsusp
