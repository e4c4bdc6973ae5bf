#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "homsusp/geometry.hpp"
#include "homsusp/quadrature.hpp"

namespace homsusp {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;
using BaryGrad = Eigen::Matrix<double, 3, 2>;  // rows: grad lambda_i
using P2Grad = Eigen::Matrix<double, 6, 2>;

// Local P2 node order: v0, v1, v2, edge(0,1), edge(1,2), edge(2,0).
std::array<double, 6> p2_values(const Eigen::Vector3d& l);
P2Grad p2_gradients(const Eigen::Vector3d& l, const BaryGrad& g);
BaryGrad barycentric_gradients(const Mesh& mesh, int t);
Vec2 to_physical(const Mesh& mesh, int t, const Eigen::Vector3d& l);

class P2Space {
 public:
  explicit P2Space(std::shared_ptr<const Mesh> mesh);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_dofs() const { return 2 * num_nodes(); }
  const std::array<int, 6>& element(int t) const { return elements_[t]; }
  const Vec2& node(int n) const { return nodes_[n]; }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  /// Node at the midpoint of mesh edge (a, b), or -1.
  int edge_node(int a, int b) const;
  /// Nodes touched by triangles of the given region.
  std::vector<char> region_nodes(Region r) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 6>> elements_;
  std::vector<std::vector<std::pair<int, int>>> edges_of_vertex_;  // (other vertex, node)
};

/// Continuous P1 on a subset of triangles plus optional constants on triangle groups.
struct PressureSpace {
  std::shared_ptr<const Mesh> mesh;
  std::vector<int> vertex_dof;      // -1 when the vertex carries no P1 pressure
  std::vector<char> p1_triangle;    // triangles on which the P1 part lives
  std::vector<int> group_dof;       // per triangle, constant-group dof or -1
  int n_p1 = 0;
  int n_groups = 0;

  int size() const { return n_p1 + n_groups; }
  static PressureSpace all_p1(std::shared_ptr<const Mesh> mesh);
  static PressureSpace fluid_p1(std::shared_ptr<const Mesh> mesh);
  /// Fluid P1 plus one constant per particle (triangle -> particle index, -1 for none).
  static PressureSpace fluid_p1_plus_groups(std::shared_ptr<const Mesh> mesh,
                                            const std::vector<int>& group_of_triangle);
  double evaluate(const Vec& p, int t, const Eigen::Vector3d& l) const;
  bool supported(int t) const { return p1_triangle[t] || group_dof[t] >= 0; }
};

/// Planar rigid constraint on a node set: u = m + spin (x - c)^perp + A (x - c).
struct RigidGroup {
  std::vector<int> nodes;
  Vec2 center = Vec2::Zero();
  Mat2 strain = Mat2::Zero();
  bool pin_translation = false;
  bool pin_spin = false;
};

struct VelocityConstraintSpec {
  bool periodic = false;
  /// Zero (or boundary_value) on the boundary of the mesh bounding box.
  bool dirichlet_box = false;
  std::function<Vec2(const Vec2&)> boundary_value;
  std::vector<RigidGroup> rigid;
  std::vector<int> pinned_nodes;
  double periodic_tol = 1e-12;
};

/// Full velocity dofs as an affine image of the reduced ones: u = E r + offset.
class ConstraintMap {
 public:
  int full_size = 0;
  int reduced_size = 0;
  std::vector<int> ptr;
  std::vector<int> col;
  std::vector<double> coef;
  Vec offset;
  /// Reduced index of the first rigid dof of each group (-1 when pinned), x / y / spin.
  std::vector<std::array<int, 3>> rigid_dofs;
  std::vector<RigidGroup> rigid;
  bool periodic = false;

  Vec expand(const Vec& reduced) const;
  /// E^T f.
  Vec restrict_adjoint(const Vec& full) const;
  /// Least-squares preimage: the reduced vector whose expansion is closest to `full`.
  Vec reduce(const Vec& full) const;
  bool constrained(int dof) const { return ptr[dof + 1] - ptr[dof] != 1 || coef[ptr[dof]] != 1.0; }
  /// Rebuilds the offset for new prescribed strains on the rigid groups.
  void set_rigid_strains(const std::vector<Vec2>& nodes, const std::vector<Mat2>& strains);
  void set_offset(const Vec& full_offset) { offset = full_offset; }
};

ConstraintMap build_velocity_constraints(const P2Space& space, const VelocityConstraintSpec& spec);

struct PressureMap {
  std::vector<int> reduced_of_full;  // -1 for the pinned dof
  int reduced_size = 0;
  int pinned = -1;
  Vec expand(const Vec& reduced) const;
};

PressureMap build_pressure_map(const PressureSpace& space, bool periodic, bool pin_one,
                               double periodic_tol = 1e-12);

enum class StrainForm { Symmetric, Gradient };

struct Viscosity {
  double mu = 1.0;
  std::function<double(const Vec2&)> field;
  /// Energy density 2 e^T W e in Mandel coordinates; overrides mu when set.
  std::optional<Eigen::Matrix3d> mandel;

  static Viscosity scalar(double mu);
  static Viscosity tensor(const Eigen::Matrix3d& w);
  void validate() const;
  Eigen::Matrix3d at(const Vec2& x) const;
};

/// Mandel strain of the vector basis function N e_c.
inline Eigen::Vector3d mandel_strain(double dx, double dy, int c) {
  return c == 0 ? Eigen::Vector3d(dx, 0.0, dy / kSqrt2) : Eigen::Vector3d(0.0, dy, dx / kSqrt2);
}

using VectorFn = std::function<Vec2(const Vec2&)>;

struct StokesForms {
  Viscosity viscosity;
  StrainForm form = StrainForm::Symmetric;
  /// Triangles entering the viscous form; default: all fluid triangles.
  std::vector<char> stiffness_mask;
  VectorFn body_force;
  bool pressure_mass = false;
};

struct SaddleSystem {
  SpMat K;
  SpMat B;  // rows: reduced pressure, B = -div
  SpMat Mp;  // reduced pressure mass (optional)
  Vec F;
  Vec G;
};

SaddleSystem assemble_stokes(const P2Space& vspace, const PressureSpace& pspace,
                             const ConstraintMap& vmap, const PressureMap& pmap,
                             const StokesForms& forms);

/// Right-hand sides only (same forms and maps); cheap re-assembly for new offsets or forces.
void assemble_rhs(const P2Space& vspace, const PressureSpace& pspace, const ConstraintMap& vmap,
                  const PressureMap& pmap, const StokesForms& forms, Vec& F, Vec& G);

/// Full-dof matrices without constraints (K over masked triangles, B against all pressure dofs).
void assemble_full(const P2Space& vspace, const PressureSpace& pspace, const StokesForms& forms,
                   SpMat& K, SpMat& B);

/// Reduced load E^T (integral of f . phi) over the triangles in mask (all when empty).
Vec assemble_load(const P2Space& vspace, const ConstraintMap& vmap, const VectorFn& f,
                  const std::vector<char>& mask = {});

struct SolverOptions {
  /// Auto: sparse LU up to direct_limit unknowns, Uzawa with a Cholesky-factored K above.
  enum class Method { Auto, Direct, Uzawa } method = Method::Auto;
  int direct_limit = 200000;
  double tol = 1e-10;
  int max_iterations = 2000;
  /// Cholesky check of K on systems up to this many velocity dofs (0 disables).
  int definiteness_check_limit = 250000;
  std::string dump_prefix;
};

struct SolveResult {
  Vec u;
  Vec p;
  std::vector<double> trace;
  double residual = 0.0;
  int iterations = 0;
};

/// Factorizes once; solve() may be called repeatedly with new right-hand sides.
class SaddleSolver {
 public:
  SaddleSolver(const SaddleSystem& system, const SolverOptions& options = {});
  ~SaddleSolver();
  SaddleSolver(const SaddleSolver&) = delete;
  SaddleSolver& operator=(const SaddleSolver&) = delete;

  /// `p0` warm-starts the Uzawa iteration; ignored by the direct path.
  SolveResult solve(const Vec& F, const Vec& G, const Vec* p0 = nullptr) const;
  int velocity_size() const;
  int pressure_size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum FieldFlags : unsigned {
  kDirichlet = 1u << 0,
  kPeriodic = 1u << 1,
  kRigidPerParticle = 1u << 2,
  kRigidStrain = 1u << 3,
  kZeroMeanPressure = 1u << 4,
  kZeroMeanVelocity = 1u << 5,
};

struct FieldSample {
  Vec2 value = Vec2::Zero();
  Mat2 grad = Mat2::Zero();
};

struct MixedField {
  std::shared_ptr<const P2Space> vspace;
  std::shared_ptr<const PressureSpace> pspace;
  Vec u;  // interleaved (x, y) per P2 node
  Vec p;
  unsigned flags = 0;
  double residual = 0.0;

  const Mesh& mesh() const { return vspace->mesh(); }
  Vec2 velocity(int t, const Eigen::Vector3d& l) const;
  Mat2 gradient(int t, const Eigen::Vector3d& l) const;
  FieldSample sample(int t, const Eigen::Vector3d& l) const;
  /// Second derivatives (constant per triangle): H[c](i, j) = d_i d_j u_c.
  std::array<Mat2, 2> hessian(int t) const;
  double pressure(int t, const Eigen::Vector3d& l) const;
  Vec2 node_velocity(int n) const { return {u(2 * n), u(2 * n + 1)}; }
};

MixedField make_field(std::shared_ptr<const P2Space> vspace, std::shared_ptr<const PressureSpace> pspace);

/// Assembles, solves and expands one constrained Stokes problem.
MixedField solve_stokes(std::shared_ptr<const P2Space> vspace, std::shared_ptr<const PressureSpace> pspace,
                        const ConstraintMap& vmap, const PressureMap& pmap, const StokesForms& forms,
                        const SolverOptions& options = {}, unsigned flags = 0);
/// Nodal interpolation of f into the P2 space.
Vec interpolate(const P2Space& space, const VectorFn& f);

/// Subtracts the pressure mean over the pressure support; returns the removed mean.
double normalize_pressure(MixedField& field);
/// Subtracts the velocity mean over the whole mesh; returns the removed mean.
Vec2 normalize_velocity(MixedField& field);
double pressure_mean(const MixedField& field);
Vec2 velocity_mean(const MixedField& field);

/// Field evaluated on triangle t of some host mesh at barycentric l (physical point x).
using FieldFn = std::function<FieldSample(int t, const Eigen::Vector3d& l, const Vec2& x)>;

FieldFn field_fn(const MixedField& field);
FieldFn difference(FieldFn a, FieldFn b);

struct NormSet {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double div = 0.0;
  double strain = 0.0;
  double h1() const { return std::sqrt(l2 * l2 + h1_semi * h1_semi); }
};

/// Norms of a field over the triangles of `mesh` (restricted to mask when non-empty).
NormSet norms(const Mesh& mesh, const FieldFn& f, const std::vector<char>& mask = {},
              const TriangleRule& rule = triangle_rule_collapsed(5));

/// Integral over `mesh` of mu e(u):e(u) (the bulk part of the energies).
double strain_energy(const MixedField& field, double mu, const std::vector<char>& mask = {});

/// Mandel-tensor viscous energy: integral of e^T W e.
double tensor_energy(const MixedField& field, const Eigen::Matrix3d& w);

/// Integral of f . u over the mesh.
double load_work(const MixedField& field, const VectorFn& f);

/// Integral over the mesh of phi . f(t, l, x) for every P2 basis function (full dof vector).
Vec assemble_pointwise_load(const P2Space& space,
                            const std::function<Vec2(int, const Eigen::Vector3d&, const Vec2&)>& f,
                            const std::vector<char>& mask = {});

void write_field_vtk(const MixedField& field, const std::string& path, const std::string& name = "u");

}  // namespace homsusp
