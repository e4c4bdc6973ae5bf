#include <cmath>

#include "homsusp/error.hpp"
#include "homsusp/forces.hpp"
#include "homsusp/quadrature.hpp"

namespace homsusp {

namespace {

constexpr int kArclengthPanels = 4096;

double wrap_angle(double t) {
  t = std::fmod(t, 2.0 * kPi);
  return t < 0.0 ? t + 2.0 * kPi : t;
}

}  // namespace

Profile Profile::none() {
  Profile p;
  p.kind = Kind::None;
  return p;
}

Profile Profile::linear(const Vec2& b) {
  Profile p;
  p.kind = Kind::Linear;
  p.b = b;
  p.validate();
  return p;
}

Profile Profile::sqrt1p() {
  Profile p;
  p.kind = Kind::Sqrt1p;
  return p;
}

Profile Profile::huber(double kappa) {
  Profile p;
  p.kind = Kind::Huber;
  p.kappa = kappa;
  p.validate();
  return p;
}

double Profile::value(const Vec2& z) const {
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::Linear: return b.dot(z);
    case Kind::Sqrt1p: {
      const double n2 = z.squaredNorm();
      // sqrt(1 + n2) - 1 without cancellation
      return n2 / (std::sqrt(1.0 + n2) + 1.0);
    }
    case Kind::Huber: {
      const double n = z.norm();
      return n <= kappa ? 0.5 * n * n / kappa : n - 0.5 * kappa;
    }
  }
  return 0.0;
}

Vec2 Profile::gradient(const Vec2& z) const {
  switch (kind) {
    case Kind::None: return Vec2::Zero();
    case Kind::Linear: return b;
    case Kind::Sqrt1p: return z / std::sqrt(1.0 + z.squaredNorm());
    case Kind::Huber: {
      const double n = z.norm();
      return n <= kappa ? Vec2(z / kappa) : Vec2(z / n);
    }
  }
  return Vec2::Zero();
}

double Profile::lipschitz() const {
  switch (kind) {
    case Kind::None: return 0.0;
    case Kind::Linear: return b.norm();
    default: return 1.0;
  }
}

void Profile::validate() const {
  if (kind == Kind::Linear)
    require(b.allFinite(), ErrorCode::InvalidArgument, "linear profile direction must be finite");
  if (kind == Kind::Huber)
    require(std::isfinite(kappa) && kappa > 0.0, ErrorCode::InvalidArgument, "huber kappa must be positive");
}

std::string_view to_string(Profile::Kind kind) {
  switch (kind) {
    case Profile::Kind::None: return "none";
    case Profile::Kind::Linear: return "linear";
    case Profile::Kind::Sqrt1p: return "sqrt1p";
    case Profile::Kind::Huber: return "huber";
  }
  return "?";
}

Profile::Kind profile_kind_from_string(const std::string& name) {
  if (name == "none") return Profile::Kind::None;
  if (name == "linear") return Profile::Kind::Linear;
  if (name == "sqrt1p") return Profile::Kind::Sqrt1p;
  if (name == "huber") return Profile::Kind::Huber;
  fail(ErrorCode::ConfigError, "unknown force profile '" + name + "'");
}

double SurfaceWeight::operator()(double sigma) const {
  double w = mean;
  for (std::size_t j = 0; j < cos_coef.size(); ++j) w += cos_coef[j] * std::cos(2.0 * kPi * (j + 1) * sigma);
  for (std::size_t j = 0; j < sin_coef.size(); ++j) w += sin_coef[j] * std::sin(2.0 * kPi * (j + 1) * sigma);
  return w;
}

double SurfaceWeight::bound() const {
  double b = std::abs(mean);
  for (double c : cos_coef) b += std::abs(c);
  for (double c : sin_coef) b += std::abs(c);
  return b;
}

void SurfaceWeight::validate() const {
  require(std::isfinite(bound()), ErrorCode::InvalidArgument, "surface weight must be finite");
  require(mean >= bound() - std::abs(mean), ErrorCode::InvalidArgument,
          "surface weight must be nonnegative: mean below the sum of harmonic amplitudes");
}

SurfaceForceModel::SurfaceForceModel(InclusionShape shape, Profile profile, SurfaceWeight weight,
                                     AmplitudeLaw law)
    : shape_(shape), profile_(profile), weight_(std::move(weight)), law_(law) {
  profile_.validate();
  weight_.validate();
  law_.validate();
  auto table = std::make_shared<std::vector<double>>(kArclengthPanels + 1, 0.0);
  const LineRule& rule = gauss_legendre(4);
  const double dt = 2.0 * kPi / kArclengthPanels;
  if (!shape_.empty()) {
    for (int i = 0; i < kArclengthPanels; ++i) {
      double s = 0.0;
      for (std::size_t q = 0; q < rule.x.size(); ++q) s += rule.w[q] * shape_.speed((i + rule.x[q]) * dt);
      (*table)[i + 1] = (*table)[i] + s * dt;
    }
  }
  arclength_ = table;
  if (!shape_.empty()) {
    double w = 0.0;
    for (int i = 0; i < kArclengthPanels; ++i)
      for (std::size_t q = 0; q < rule.x.size(); ++q) {
        const double t = (i + rule.x[q]) * dt;
        w += rule.w[q] * dt * weight_at(t) * shape_.speed(t);
      }
    weight_integral_ = w;
  }
}

bool SurfaceForceModel::is_zero() const {
  return profile_.kind == Profile::Kind::None || shape_.empty() ||
         (profile_.kind == Profile::Kind::Linear && profile_.b.isZero(0.0)) || weight_.bound() == 0.0 ||
         (law_.kind == AmplitudeLaw::Kind::Uniform && law_.hi == 0.0);
}

double SurfaceForceModel::arclength_fraction(double t) const {
  const std::vector<double>& L = *arclength_;
  if (L.back() <= 0.0) return 0.0;
  const double dt = 2.0 * kPi / kArclengthPanels;
  const double tw = wrap_angle(t);
  const int i = std::min(kArclengthPanels - 1, static_cast<int>(tw / dt));
  // Cubic Hermite on the panel, with slopes given by the speed.
  const double x = tw / dt - i;
  const double s0 = shape_.speed(i * dt) * dt, s1 = shape_.speed((i + 1) * dt) * dt;
  const double h00 = (1 + 2 * x) * (1 - x) * (1 - x), h10 = x * (1 - x) * (1 - x);
  const double h01 = x * x * (3 - 2 * x), h11 = x * x * (x - 1);
  const double l = h00 * L[i] + h10 * s0 + h01 * L[i + 1] + h11 * s1;
  return l / L.back();
}

double SurfaceForceModel::parameter_of(const Vec2& s) const {
  const double t = std::atan2(s.y(), s.x());
  require(!shape_.empty() && (shape_.point(t) - s).norm() <= 1e-10, ErrorCode::InvalidArgument,
          "point is not on the inclusion boundary");
  return t;
}

double SurfaceForceModel::weight_integral() const { return weight_integral_; }

double SurfaceForceModel::potential(const Vec2& z) const {
  if (is_zero()) return 0.0;
  return law_.mean() * weight_integral_ * profile_.value(z);
}

ForceEstimate homogenized_force(const SurfaceForceModel& model, const Vec2& z, int n_samples,
                                const RandomCellField& field, Expectation method) {
  require(method == Expectation::ClosedForm || n_samples >= 2, ErrorCode::InvalidArgument,
          "homogenized force needs at least two samples");
  ForceEstimate out;
  if (model.is_zero()) return out;
  const Vec2 grad = model.weight_integral() * model.profile().gradient(z);
  if (method == Expectation::ClosedForm) {
    out.value = -model.law().mean() * grad;
    return out;
  }
  std::vector<double> a(n_samples);
  for (int j = 0; j < n_samples; ++j) a[j] = field.draw(static_cast<std::uint64_t>(j), 1u);
  const double mean = pairwise_sum(a) / n_samples;
  std::vector<double> dev(n_samples);
  for (int j = 0; j < n_samples; ++j) dev[j] = (a[j] - mean) * (a[j] - mean);
  const double sd = std::sqrt(pairwise_sum(dev) / (n_samples - 1));
  out.value = -mean * grad;
  out.half_width = 1.96 * sd / std::sqrt(static_cast<double>(n_samples)) * grad.cwiseAbs();
  out.samples = n_samples;
  return out;
}

double ergodic_average(const std::function<double(const Vec2&, double)>& h, const VectorFn& u, const Box& U,
                       const Rational& eps, const RandomCellField& field, int midpoints_per_side) {
  require(eps > Rational(0), ErrorCode::InvalidArgument, "eps must be positive");
  require(midpoints_per_side >= 1, ErrorCode::InvalidArgument, "need at least one midpoint per side");
  const std::int64_t x0 = (U.lo[0] / eps).ceil(), x1 = (U.hi[0] / eps).floor();
  const std::int64_t y0 = (U.lo[1] / eps).ceil(), y1 = (U.hi[1] / eps).floor();
  const double e = eps.to_double();
  const int m = midpoints_per_side;
  std::vector<double> terms;
  for (std::int64_t kx = x0; kx < x1; ++kx)
    for (std::int64_t ky = y0; ky < y1; ++ky) {
      Vec2 avg = Vec2::Zero();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) avg += u(Vec2(e * (kx + (i + 0.5) / m), e * (ky + (j + 0.5) / m)));
      avg /= m * m;
      terms.push_back(h(avg, field.amplitude({static_cast<long>(kx), static_cast<long>(ky)})));
    }
  return e * e * pairwise_sum(terms);
}

std::vector<SurfacePoint> surface_quadrature(const PerforatedMesh& mesh, int points_per_facet) {
  const LineRule& rule = gauss_legendre(points_per_facet);
  const double eps = mesh.eps.to_double();
  std::vector<SurfacePoint> out;
  out.reserve(mesh.facets.size() * rule.x.size());
  for (const InterfaceFacet& f : mesh.facets) {
    const Vec2 xa = mesh.vertices[f.a], xb = mesh.vertices[f.b];
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      const double l = rule.x[q];
      SurfacePoint p;
      p.particle = f.particle;
      p.triangle = f.fluid_triangle;
      p.x = (1.0 - l) * xa + l * xb;
      p.bary = barycentric(mesh, f.fluid_triangle, p.x);
      p.t = f.t0 + l * (f.t1 - f.t0);
      p.ds = eps * mesh.cell.shape.speed(p.t) * std::abs(f.t1 - f.t0) * rule.w[q];
      out.push_back(p);
    }
  }
  return out;
}

double surface_energy_micro(const SurfaceForceModel& model, const RandomCellField& field,
                            const PerforatedMesh& mesh, const std::vector<SurfacePoint>& points,
                            const MixedField& v) {
  if (model.is_zero()) return 0.0;
  std::vector<double> amp(mesh.particles.size());
  for (std::size_t k = 0; k < amp.size(); ++k) amp[k] = field.amplitude(mesh.particles[k]);
  const double eps = mesh.eps.to_double();
  std::vector<double> terms(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const SurfacePoint& p = points[i];
    terms[i] = eps * model.g(p.t, v.velocity(p.triangle, p.bary), amp[p.particle]) * p.ds;
  }
  return pairwise_sum(terms);
}

double surface_energy_micro(const SurfaceForceModel& model, const RandomCellField& field,
                            const PerforatedMesh& mesh, const MixedField& v) {
  return surface_energy_micro(model, field, mesh, surface_quadrature(mesh), v);
}

}  // namespace homsusp
