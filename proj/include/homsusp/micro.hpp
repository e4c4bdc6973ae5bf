#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "homsusp/cell.hpp"
#include "homsusp/forces.hpp"
#include "homsusp/macro.hpp"

namespace homsusp {

struct MicroProblem {
  std::shared_ptr<const PerforatedMesh> mesh;
  double mu = 1.0;
  std::optional<SurfaceForceModel> force;
  VectorFn body_force;
  PicardOptions picard;
  SolverOptions solver;
};

struct ParticleBalance {
  Vec2 fluid_force = Vec2::Zero();   // consistent flux of the fluid stress on the particle
  Vec2 body_force = Vec2::Zero();    // integral of f over the particle
  Vec2 surface_force = Vec2::Zero(); // resultant of -grad g over its boundary
  double fluid_torque = 0.0;
  double body_torque = 0.0;
  double surface_torque = 0.0;
  double force_residual() const { return (fluid_force + body_force + surface_force).norm(); }
  double torque_residual() const { return std::abs(fluid_torque + body_torque + surface_torque); }
};

struct MicroSolution {
  MixedField u;
  PicardTrace trace;
  double energy = 0.0;
  double weak_residual = 0.0;
  double div_residual = 0.0;
  double rigid_residual = 0.0;  // max over particles of the rigid-fit defect, relative
};

/// The eps-scale problem on one perforated mesh. The Stokes operator does not
/// depend on omega, so one factorization serves every realization.
class MicroSolver {
 public:
  explicit MicroSolver(MicroProblem problem);
  ~MicroSolver();
  MicroSolver(const MicroSolver&) = delete;
  MicroSolver& operator=(const MicroSolver&) = delete;

  /// Damped Picard for the realization `field` from `initial` (zero when null).
  MicroSolution solve(const RandomCellField& field, const MixedField* initial = nullptr) const;
  /// E^eps_omega(v), or kInadmissible outside the discrete V^eps.
  double energy(const MixedField& v, const RandomCellField& field) const;
  bool admissible(const MixedField& v) const;
  /// Element of the discrete V^eps driven by a random load, unit H1 norm.
  MixedField random_admissible(std::uint64_t seed) const;
  /// Per-particle force and torque balance of a computed solution.
  std::vector<ParticleBalance> balance(const MicroSolution& s, const RandomCellField& field) const;
  /// Rigid motion of particle k fitted to v in L2 over the particle, and the relative defect.
  RigidMotion fit_rigid(const MixedField& v, int particle, double* defect = nullptr) const;

  const MicroProblem& problem() const;
  const std::shared_ptr<const P2Space>& velocity_space() const;
  const std::vector<SurfacePoint>& surface_points() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// L2 projection of v onto rigid motions about `center` over the given triangles.
/// `defect` receives ||v - R||_L2 / ||v||_L2 on those triangles (0 when v vanishes there).
RigidMotion rigid_l2_fit(const MixedField& v, const std::vector<int>& triangles, const Vec2& center,
                         double* defect = nullptr);

/// Rigid triangles of each particle.
std::vector<std::vector<int>> particle_triangles(const PerforatedMesh& mesh);

MicroSolution solve_micro(const MicroProblem& problem, const RandomCellField& field);
double energy_micro(const MixedField& v, const MicroProblem& problem, const RandomCellField& field);

struct ProjectionReport {
  MixedField projected;  // u' in the discrete V^eps
  double gap = 0.0;       // ||u - u'||_H1(D)
  double div_norm = 0.0;  // ||div u||_L2(D)
  double rigid_strain = 0.0;  // ||e(u)||_L2(D_r^eps)
  double constant() const { return gap / (div_norm + rigid_strain); }
  double divergence_step = 0.0;  // ||w||_H1 of the divergence correction
  double extension_step = 0.0;   // ||sum of cell extensions||_H1
};

/// Three-step construction: remove the divergence by a global Stokes solve, extend
/// each particle's strain defect into its cell by a local constrained Stokes solve,
/// subtract. `u` is interpolated into the P2 space of the perforated mesh.
ProjectionReport project_to_Veps(const VectorFn& u, const PerforatedMesh& mesh,
                                 const SolverOptions& options = {});

/// r^eps(x) = eps sum_a chi_a(x / eps) (e(u*)(x) : E_a), chi evaluated with periodic wrapping.
class Corrector {
 public:
  /// `basis` holds the deviatoric correctors. When it lives on mesh.cell the cell
  /// triangle of every particle triangle is known and no point location is needed.
  Corrector(const PerforatedMesh& mesh, std::vector<CellSolution> basis);
  ~Corrector();

  /// r^eps of the macro field u* as a field on the perforated mesh.
  FieldFn of(const MixedField& ustar) const;
  /// u* - r^eps on the perforated mesh.
  FieldFn corrected(const MixedField& ustar) const;

 private:
  FieldSample cell_sample(int a, int t, const Eigen::Vector3d& l, const Vec2& x) const;

  const PerforatedMesh* mesh_;
  std::vector<CellSolution> basis_;
  bool matching_ = false;
  std::unique_ptr<Locator> cell_locator_;
};

/// Field on a macro mesh sampled at the points of another mesh of the same domain.
/// The returned function keeps a reference to `field`.
FieldFn macro_field_fn(const MixedField& field);

struct GapNorms {
  double l2 = 0.0;          // ||u^eps - u*||_L2
  double h1 = 0.0;          // ||u^eps - u*||_H1
  double corrected_h1 = 0.0;  // ||u^eps - (u* - r^eps)||_H1
};

GapNorms gap_norms(const MixedField& micro, const MixedField& ustar, const Corrector& corrector);

}  // namespace homsusp
