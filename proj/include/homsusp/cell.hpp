#pragma once

#include <memory>
#include <vector>

#include "homsusp/fem.hpp"
#include "homsusp/geometry.hpp"

namespace homsusp {

struct CellSolution {
  Mat2 A = Mat2::Zero();
  /// Periodic velocity with zero mean over Y; pressure on the fluid part with zero mean.
  MixedField chi;
  /// Integral over Y of mu e(chi):e(chi).
  double dissipation = 0.0;
};

struct CellDiagnostics {
  double rigid_defect = 0.0;     // ||e(chi) - A||_{L2(T)}
  double discrete_div = 0.0;     // algebraic divergence against the pressure space
  double velocity_mean = 0.0;
  double pressure_mean = 0.0;
};

/// Periodic cell problem on one mesh; the saddle matrix is factorized once and
/// reused for every loading.
class CellSolver {
 public:
  CellSolver(std::shared_ptr<const CellMesh> mesh, double mu, const SolverOptions& options = {});
  ~CellSolver();
  CellSolver(const CellSolver&) = delete;
  CellSolver& operator=(const CellSolver&) = delete;

  /// Throws NonTraceFreeStrain for tr(A) != 0 and InvalidArgument for non-symmetric A.
  CellSolution solve(const Mat2& A) const;

  /// Zero-loading field driven by a reduced load vector: an element of the discrete K_0.
  Vec k0_field(const Vec& reduced_load) const;
  int reduced_size() const;

  /// C[A, B] from the consistent flux of chi_A against the lift of B; independent
  /// of chi_B, so C[A, B] - C[B, A] measures the discrete asymmetry.
  double flux_form(const CellSolution& a, const Mat2& B) const;

  /// Integral over Y of 2 mu [A 1_T - e(chi_A)] : e(phi) for a full velocity vector phi.
  double variational_residual(const CellSolution& a, const Vec& phi) const;

  /// Integral over Y of mu |A 1_T - e(v)|^2.
  double cell_energy(const Mat2& A, const Vec& v) const;

  CellDiagnostics diagnose(const CellSolution& a) const;

  const CellMesh& mesh() const;
  const std::shared_ptr<const P2Space>& velocity_space() const;
  double mu() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

CellSolution solve_cell(const CellMesh& mesh, const Mat2& A, double mu, const SolverOptions& options = {});

struct EffectiveTensor {
  double mu = 1.0;
  std::vector<Mat2> basis;          // orthonormal deviatoric basis
  Eigen::Matrix2d C_raw;            // flux form on the basis, not symmetrized
  Eigen::Matrix2d C;                // symmetric part of C_raw
  Eigen::Matrix2d C_energy;         // integral of mu e(chi_a):e(chi_b)
  Eigen::Matrix2d mu_star;          // mu I + C in basis coordinates
  double symmetry_defect = 0.0;     // max |C_raw(a,b) - C_raw(b,a)|
  double min_eigenvalue = 0.0;      // of C
  bool symmetric = false;
  bool positive_semidefinite = false;

  /// Tensor of the pure fluid: C = 0, mu* = mu.
  static EffectiveTensor fluid(double mu);

  /// C[A, B] for trace-free symmetric A, B.
  double form(const Mat2& A, const Mat2& B) const;
  /// mu* A for trace-free symmetric A.
  Mat2 apply(const Mat2& A) const;
  /// Energy-density matrix W with 2 e^T W e = 2 mu e:e + 2 C[dev e, dev e], for the macro solver.
  Eigen::Matrix3d mandel_tensor() const;
};

struct EffectiveResult {
  EffectiveTensor tensor;
  std::vector<CellSolution> correctors;  // one per basis element
};

/// Solves the cell problem on each deviatoric basis matrix and assembles C and mu*.
EffectiveResult effective_tensor(const CellSolver& solver);
EffectiveResult effective_tensor(const CellMesh& mesh, double mu, const SolverOptions& options = {});

std::vector<CellSolution> corrector_basis(const CellSolver& solver);

/// Velocity of the corrector sum  sum_a (A : E_a) chi_a  at nodes of the cell mesh.
Vec reconstruct(const std::vector<CellSolution>& basis, const Mat2& A);

/// Checks the loading: symmetric and trace free.
void require_deviatoric(const Mat2& A);

}  // namespace homsusp
