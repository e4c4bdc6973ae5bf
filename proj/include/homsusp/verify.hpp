#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "homsusp/io.hpp"
#include "homsusp/micro.hpp"

namespace homsusp {

struct ConvergenceConfig {
  Box domain;
  InclusionShape shape = InclusionShape::disk(0.1);
  double mu = 1.0;
  std::optional<SurfaceForceModel> force;
  VectorFn body_force;
  std::string body_force_name = "custom";
  std::vector<Rational> eps{Rational(1, 4), Rational(1, 8), Rational(1, 16)};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  /// Cell mesh size inside each particle cell; the cell problem uses the same mesh.
  double h_per_cell = 1.0 / 16;
  double macro_h = 1.0 / 64;
  PicardOptions picard;
  SolverOptions solver;
  Expectation expectation = Expectation::ClosedForm;
  int fstar_samples = 256;
  /// Concurrent eps levels; each level holds its own factorization in memory.
  int jobs = 1;
};

struct ConvergenceRow {
  Rational eps;
  std::uint64_t seed = 0;
  double energy_micro = 0.0;
  double energy_star = 0.0;
  double energy_gap = 0.0;  // |E^eps - E*|
  double l2 = 0.0;
  double h1 = 0.0;
  double corrected_h1 = 0.0;
  int picard_iterations = 0;
  double seconds = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;  // eps-major, seeds in config order
  EffectiveTensor tensor;
  double energy_star = 0.0;
  std::map<std::string, std::string> metadata;

  /// Rows of one seed in eps order.
  std::vector<ConvergenceRow> series(std::uint64_t seed) const;
  /// Seeds for which `metric` strictly decreases along the eps list.
  int seeds_decreasing(double ConvergenceRow::*metric) const;
  /// Rows where the corrected gap beats the plain H1 gap.
  int rows_corrector_better() const;
};

ConvergenceReport convergence_study(const ConvergenceConfig& config);

/// eps, seed, E^eps, ||u^eps - u*||_L2, ||u^eps - u*||_H1, ||u^eps - (u* - r^eps)||_H1, E*, |E^eps - E*|, Picard steps.
CsvTable convergence_table(const ConvergenceReport& report);

struct DilutePoint {
  double phi = 0.0;
  double h = 0.0;
  double excess = 0.0;  // mu*_shear / mu - 1
};

struct DiluteReport {
  std::vector<double> phi;
  std::vector<double> h;           // mesh sizes, coarse to fine
  std::vector<DilutePoint> points;  // phi-major
  std::vector<double> extrapolated;  // Richardson value per phi from the two finest meshes
  std::vector<double> discretization_error;  // |finest - extrapolated| per phi
  double slope = 0.0;         // least-squares line through the extrapolated values
  double intercept = 0.0;     // of the same line
  double slope_origin = 0.0;  // least squares through the origin
  double slope_finest = 0.0;  // unconstrained fit on the finest mesh alone
  double rate = 2.0;          // convergence order used for extrapolation (observed with >= 3 meshes)
};

/// mu*_shear / mu - 1 against phi with Richardson extrapolation in the cell mesh size.
DiluteReport dilute_study(const InclusionShape& shape, const std::vector<double>& phi, const std::vector<double>& h,
                          double mu = 1.0, int jobs = 1);

/// One row per (phi, h) plus one extrapolated row per phi (h = 0).
CsvTable dilute_table(const DiluteReport& report);

/// Viscosity of the simple-shear mode E12: the (E12, E12) entry of mu* in the deviatoric basis.
double shear_viscosity(const EffectiveTensor& tensor);

/// Runs fn(0..n-1) on up to `jobs` threads; the first exception is rethrown.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace homsusp
