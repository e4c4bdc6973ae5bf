#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "homsusp/fem.hpp"
#include "homsusp/geometry.hpp"

namespace homsusp {

/// Philox4x32 with 10 rounds.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Two uniforms in (0, 1) with 53-bit resolution from one Philox block.
std::array<double, 2> philox_uniforms(std::uint64_t seed, std::array<std::uint32_t, 4> counter);

struct AmplitudeLaw {
  enum class Kind { Uniform, LogNormal } kind = Kind::Uniform;
  double lo = 0.5;
  double hi = 1.5;
  double mu_ln = 0.0;
  double sigma_ln = 0.25;

  static AmplitudeLaw uniform(double lo, double hi);
  static AmplitudeLaw lognormal(double mu_ln, double sigma_ln);

  double mean() const;
  double stddev() const;
  /// Maps two independent uniforms in (0, 1) to a draw.
  double sample(double u1, double u2) const;
  void validate() const;
};

/// Realization omega of the i.i.d. per-cell amplitudes; a(tau_k omega) is
/// generated from the counter (k, stream 0) under the key `seed`.
class RandomCellField {
 public:
  RandomCellField() = default;
  RandomCellField(std::uint64_t seed, AmplitudeLaw law);

  double amplitude(const LatticeIndex& k) const;
  /// tau_l omega: amplitude(k) of the result is amplitude(k + l) of this field.
  RandomCellField shifted(const LatticeIndex& l) const;
  /// j-th independent draw of the law on a numbered stream (Monte Carlo replicas).
  double draw(std::uint64_t j, std::uint32_t stream) const;

  std::uint64_t seed() const { return seed_; }
  const AmplitudeLaw& law() const { return law_; }

 private:
  std::uint64_t seed_ = 0;
  AmplitudeLaw law_;
  LatticeIndex offset_;
};

/// Convex Lipschitz profile rho: R^2 -> R with rho(0) = 0.
struct Profile {
  enum class Kind { None, Linear, Sqrt1p, Huber } kind = Kind::Sqrt1p;
  Vec2 b = Vec2(1.0, 0.0);  // linear
  double kappa = 1.0;       // huber

  static Profile none();
  static Profile linear(const Vec2& b);
  static Profile sqrt1p();
  static Profile huber(double kappa);

  double value(const Vec2& z) const;
  Vec2 gradient(const Vec2& z) const;
  double lipschitz() const;
  void validate() const;
};

std::string_view to_string(Profile::Kind kind);
Profile::Kind profile_kind_from_string(const std::string& name);

/// w(sigma) = mean + sum_j cos_j cos(2 pi j sigma) + sin_j sin(2 pi j sigma) in the
/// normalized arclength sigma in [0, 1), measured from the point at polar angle 0.
struct SurfaceWeight {
  double mean = 1.0;
  std::vector<double> cos_coef;
  std::vector<double> sin_coef;

  double operator()(double sigma) const;
  double bound() const;
  /// Nonnegativity: mean >= sum of |coefficients|.
  void validate() const;
};

/// g(s, z, omega) = a(omega) w(s) rho(z) on the boundary of the unit-cell inclusion.
class SurfaceForceModel {
 public:
  SurfaceForceModel(InclusionShape shape, Profile profile, SurfaceWeight weight, AmplitudeLaw law);

  const InclusionShape& shape() const { return shape_; }
  const Profile& profile() const { return profile_; }
  const SurfaceWeight& weight() const { return weight_; }
  const AmplitudeLaw& law() const { return law_; }
  bool is_zero() const;

  /// Normalized arclength of the boundary point with polar parameter t.
  double arclength_fraction(double t) const;
  double weight_at(double t) const { return weight_(arclength_fraction(t)); }
  /// Polar parameter of a boundary point; InvalidArgument if s is off the curve by more than 1e-10.
  double parameter_of(const Vec2& s) const;

  double g(double t, const Vec2& z, double a) const { return a * weight_at(t) * profile_.value(z); }
  Vec2 grad_g(double t, const Vec2& z, double a) const { return a * weight_at(t) * profile_.gradient(z); }
  double g(const Vec2& s, const Vec2& z, double a) const { return g(parameter_of(s), z, a); }
  Vec2 grad_g(const Vec2& s, const Vec2& z, double a) const { return grad_g(parameter_of(s), z, a); }

  /// Integral of w over the boundary of T by Gauss quadrature on the parametrization.
  double weight_integral() const;

  /// G*(z) = E[a] (int w ds) rho(z); its negative gradient is f*(z).
  double potential(const Vec2& z) const;

 private:
  InclusionShape shape_;
  Profile profile_;
  SurfaceWeight weight_;
  AmplitudeLaw law_;
  std::shared_ptr<const std::vector<double>> arclength_;  // cumulative, uniform in t on [0, 2 pi]
  double weight_integral_ = 0.0;
};

struct ForceEstimate {
  Vec2 value = Vec2::Zero();
  Vec2 half_width = Vec2::Zero();  // 95% confidence, componentwise
  int samples = 0;
};

enum class Expectation { ClosedForm, MonteCarlo };

/// f*(z) = - int_{dT} E[grad_z g] ds.  Monte Carlo draws the amplitude from
/// stream 1 of `field` (n_samples >= 2).
ForceEstimate homogenized_force(const SurfaceForceModel& model, const Vec2& z, int n_samples,
                                const RandomCellField& field,
                                Expectation method = Expectation::MonteCarlo);

/// eps^2 sum over k with eps k + eps [0,1]^2 inside U of h(cell average of u, a_k).
double ergodic_average(const std::function<double(const Vec2&, double)>& h, const VectorFn& u,
                       const Box& U, const Rational& eps, const RandomCellField& field,
                       int midpoints_per_side = 4);

/// Gauss point on an interface facet of a perforated mesh. The velocity trace is
/// taken on the straight facet; the parameter and arclength come from the exact curve.
struct SurfacePoint {
  int particle = 0;
  int triangle = -1;
  Eigen::Vector3d bary = Eigen::Vector3d::Zero();
  Vec2 x = Vec2::Zero();
  double t = 0.0;
  double ds = 0.0;  // physical arclength weight on the eps-scaled curve
};

std::vector<SurfacePoint> surface_quadrature(const PerforatedMesh& mesh, int points_per_facet = 4);

/// Sum over particles of int eps g(s / eps, v, tau_k omega) ds.
double surface_energy_micro(const SurfaceForceModel& model, const RandomCellField& field,
                            const PerforatedMesh& mesh, const MixedField& v);
double surface_energy_micro(const SurfaceForceModel& model, const RandomCellField& field,
                            const PerforatedMesh& mesh, const std::vector<SurfacePoint>& points,
                            const MixedField& v);

/// Pairwise summation, stable under reordering up to rounding.
double pairwise_sum(const std::vector<double>& values);

}  // namespace homsusp
