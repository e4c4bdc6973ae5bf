#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "homsusp/cell.hpp"
#include "homsusp/fem.hpp"
#include "homsusp/forces.hpp"

namespace homsusp {

inline constexpr double kInadmissible = std::numeric_limits<double>::infinity();

struct PicardOptions {
  double theta = 0.5;
  int max_iterations = 500;
  double tol = 1e-10;  // on the H1 norm of the increment
};

struct PicardTrace {
  std::vector<double> increments;  // ||u^(m) - u^(m-1)||_H1
  std::vector<double> energies;    // energy after each step
  int iterations = 0;
  bool converged = false;
};

/// f* sampled on a square z-grid [-range, range]^2 and interpolated bilinearly.
class ForceTable {
 public:
  ForceTable(std::function<Vec2(const Vec2&)> fstar, double range, int points_per_side);
  Vec2 operator()(const Vec2& z) const;
  double range() const { return range_; }

 private:
  std::function<Vec2(const Vec2&)> fstar_;
  double range_;
  int n_;
  std::vector<Vec2> values_;
};

struct HomogenizedProblem {
  std::shared_ptr<const MacroMesh> mesh;
  EffectiveTensor tensor;
  std::optional<SurfaceForceModel> force;
  RandomCellField field;
  VectorFn body_force;
  PicardOptions picard;
  SolverOptions solver;
  Expectation expectation = Expectation::ClosedForm;
  int fstar_samples = 256;
  /// Tabulate f* (always done for Monte Carlo estimates).
  bool tabulate = false;
  int table_points = 33;
};

struct HomogenizedSolution {
  MixedField u;
  PicardTrace trace;
  double energy = 0.0;
  double weak_residual = 0.0;  // relative residual of the discrete variational equation
  double div_residual = 0.0;   // algebraic divergence of u
};

/// Assembles and factorizes the homogenized Stokes operator once.
class MacroSolver {
 public:
  explicit MacroSolver(HomogenizedProblem problem);
  ~MacroSolver();
  MacroSolver(const MacroSolver&) = delete;
  MacroSolver& operator=(const MacroSolver&) = delete;

  /// Damped Picard from `initial` (zero when null). Throws PicardStalled.
  HomogenizedSolution solve(const MixedField* initial = nullptr) const;
  /// E*(v), or kInadmissible when v is not discretely divergence free or not zero on the boundary.
  double energy(const MixedField& v) const;
  bool admissible(const MixedField& v) const;
  /// Discretely divergence-free field driven by a random load, scaled to unit H1 norm.
  MixedField random_admissible(std::uint64_t seed) const;
  /// f*(z) as used by the solver (exact or tabulated).
  Vec2 fstar(const Vec2& z) const;

  const HomogenizedProblem& problem() const;
  const std::shared_ptr<const P2Space>& velocity_space() const;
  /// Coercivity constant of the viscous form: min eigenvalue of the Mandel tensor.
  double coercivity() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

HomogenizedSolution solve_homogenized(const HomogenizedProblem& problem);
double energy_star(const MixedField& v, const HomogenizedProblem& problem);

}  // namespace homsusp
