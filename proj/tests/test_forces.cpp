#include <cmath>
#include <random>

#include <doctest.h>

#include "homsusp/error.hpp"
#include "homsusp/forces.hpp"

using namespace homsusp;

namespace {

const InclusionShape kDisk = InclusionShape::disk(0.1);

SurfaceForceModel model_with(Profile p, SurfaceWeight w = {}, AmplitudeLaw law = AmplitudeLaw::uniform(0.5, 1.5),
                             InclusionShape shape = kDisk) {
  return SurfaceForceModel(shape, p, std::move(w), law);
}

std::vector<Profile> all_profiles() {
  return {Profile::linear(Vec2(0.3, -1.2)), Profile::sqrt1p(), Profile::huber(0.7)};
}

Vec2 random_vec(std::mt19937_64& rng, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec2(u(rng), u(rng));
}

SurfaceWeight wavy() {
  SurfaceWeight w;
  w.mean = 1.0;
  w.cos_coef = {0.3, 0.1};
  w.sin_coef = {0.2};
  return w;
}

}  // namespace

TEST_CASE("philox known answers") {
  using A = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        A{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        A{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("random cell field is reproducible and shift covariant") {
  const RandomCellField f(42, AmplitudeLaw::lognormal(0.0, 0.5));
  const RandomCellField g(42, AmplitudeLaw::lognormal(0.0, 0.5));
  const RandomCellField other(43, AmplitudeLaw::lognormal(0.0, 0.5));
  int differ = 0;
  for (long x = -5; x <= 5; ++x)
    for (long y = -5; y <= 5; ++y) {
      CHECK(f.amplitude({x, y}) == g.amplitude({x, y}));
      differ += f.amplitude({x, y}) != other.amplitude({x, y});
      const LatticeIndex l{3, -7};
      CHECK(f.shifted(l).amplitude({x, y}) == f.amplitude({x + 3, y - 7}));
      CHECK(f.shifted(l).shifted({-3, 7}).amplitude({x, y}) == f.amplitude({x, y}));
    }
  CHECK(differ == 121);
  CHECK(f.draw(5, 1) == g.draw(5, 1));
  CHECK(f.draw(5, 1) != f.draw(5, 2));
  CHECK_THROWS_AS(f.draw(0, 0), Error);
}

TEST_CASE("cell amplitudes are stationary") {
  for (const AmplitudeLaw& law : {AmplitudeLaw::uniform(0.5, 1.5), AmplitudeLaw::lognormal(-0.2, 0.4)}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const RandomCellField f(seed, law);
      const int m = 32;
      double sum = 0.0;
      for (long x = 0; x < m; ++x)
        for (long y = 0; y < m; ++y) sum += f.amplitude({x, y});
      CHECK(std::abs(sum / (m * m) - law.mean()) <= 4.0 * law.stddev() / m);
    }
  }
  // Closed forms of the laws.
  CHECK(AmplitudeLaw::uniform(0.5, 1.5).stddev() == doctest::Approx(1.0 / std::sqrt(12.0)));
  CHECK(AmplitudeLaw::lognormal(0.0, 1.0).mean() == doctest::Approx(std::exp(0.5)));
  CHECK_THROWS_AS(AmplitudeLaw::uniform(-1.0, 1.0), Error);
}

TEST_CASE("profiles are convex, Lipschitz and vanish at zero") {
  std::mt19937_64 rng(1);
  const SurfaceForceModel dummy = model_with(Profile::sqrt1p(), wavy());
  for (const Profile& p : all_profiles()) {
    CHECK(p.value(Vec2::Zero()) == 0.0);
    const SurfaceForceModel m = model_with(p, wavy());
    for (int i = 0; i < 100; ++i) {
      const double t = std::uniform_real_distribution<double>(0.0, 2 * kPi)(rng);
      const double a = 1.3;
      const Vec2 z1 = random_vec(rng), z2 = random_vec(rng);
      const double mid = m.g(t, 0.5 * (z1 + z2), a);
      CHECK(mid <= 0.5 * (m.g(t, z1, a) + m.g(t, z2, a)) + 1e-12);
      CHECK(std::abs(m.g(t, z1, a) - m.g(t, z2, a)) <=
            a * m.weight_at(t) * p.lipschitz() * (z1 - z2).norm() + 1e-14);
      CHECK((m.grad_g(t, z1, a) - m.grad_g(t, z2, a)).dot(z1 - z2) >= -1e-14);
    }
  }
}

TEST_CASE("profile gradients match finite differences") {
  std::mt19937_64 rng(2);
  for (const Profile& p : all_profiles()) {
    const SurfaceForceModel m = model_with(p, wavy());
    for (int i = 0; i < 50; ++i) {
      const double t = std::uniform_real_distribution<double>(0.0, 2 * kPi)(rng);
      const Vec2 z = random_vec(rng);
      const double h = 1e-6;
      Vec2 fd;
      for (int c = 0; c < 2; ++c) {
        Vec2 e = Vec2::Zero();
        e(c) = h;
        fd(c) = (m.g(t, z + e, 0.8) - m.g(t, z - e, 0.8)) / (2 * h);
      }
      CHECK((m.grad_g(t, z, 0.8) - fd).norm() <= 1e-6);
    }
  }
  const SurfaceForceModel s = model_with(Profile::sqrt1p());
  CHECK(s.g(0.3, Vec2::Zero(), 1.0) == 0.0);
  CHECK(s.grad_g(0.3, Vec2::Zero(), 1.0).norm() == 0.0);
  const Vec2 b(0.3, -1.2);
  const SurfaceForceModel l = model_with(Profile::linear(b), wavy());
  for (const Vec2& z : {Vec2(0, 0), Vec2(5, -3)})
    CHECK((l.grad_g(1.1, z, 0.9) - 0.9 * l.weight_at(1.1) * b).norm() <= 1e-15);
}

TEST_CASE("boundary points and arclength") {
  const SurfaceForceModel m = model_with(Profile::sqrt1p(), wavy());
  const double t = 2.0;
  CHECK(m.parameter_of(kDisk.point(t)) == doctest::Approx(t));
  CHECK(m.g(kDisk.point(t), Vec2(1, 2), 1.0) == doctest::Approx(m.g(t, Vec2(1, 2), 1.0)));
  CHECK_THROWS_AS(m.parameter_of(1.01 * kDisk.point(t)), Error);
  for (double s : {0.1, 1.0, 3.0, 5.5}) CHECK(m.arclength_fraction(s) == doctest::Approx(s / (2 * kPi)).epsilon(1e-12));
  CHECK(m.weight_integral() == doctest::Approx(2 * kPi * 0.17841241161527712).epsilon(1e-12));

  // Harmonics in arclength integrate to zero on a non-circular boundary too.
  const InclusionShape ell = InclusionShape::ellipse(0.1, 0.5);
  const SurfaceForceModel e = model_with(Profile::sqrt1p(), wavy(), AmplitudeLaw::uniform(0.5, 1.5), ell);
  CHECK(e.weight_integral() == doctest::Approx(ell.perimeter()).epsilon(1e-8));
  CHECK(e.arclength_fraction(kPi) == doctest::Approx(0.5).epsilon(1e-10));
  SurfaceWeight bad;
  bad.mean = 0.2;
  bad.cos_coef = {0.5};
  CHECK_THROWS_AS(model_with(Profile::sqrt1p(), bad), Error);
}

TEST_CASE("homogenized force closed forms") {
  const RandomCellField field(9, AmplitudeLaw::uniform(0.5, 1.5));
  const SurfaceForceModel zero = model_with(Profile::none());
  const ForceEstimate f0 = homogenized_force(zero, Vec2(0.4, 0.1), 100, field);
  CHECK(f0.value == Vec2::Zero());
  CHECK(f0.half_width == Vec2::Zero());

  const Vec2 b(0.3, -1.2);
  const SurfaceForceModel lin = model_with(Profile::linear(b));
  const double perimeter = 2 * kPi * 0.17841;
  CHECK(perimeter == doctest::Approx(1.12100).epsilon(1e-5));
  const Vec2 exact = -1.0 * lin.weight_integral() * b;
  CHECK(lin.weight_integral() == doctest::Approx(perimeter).epsilon(1e-5));
  for (const Vec2& z : {Vec2(0, 0), Vec2(1, -2), Vec2(-3, 0.5)}) {
    const ForceEstimate cf = homogenized_force(lin, z, 2, field, Expectation::ClosedForm);
    CHECK((cf.value - exact).norm() <= 1e-14);
    const ForceEstimate mc = homogenized_force(lin, z, 4000, field);
    CHECK((mc.value - exact).norm() <= 3.0 * mc.half_width.norm());
    CHECK(mc.half_width.norm() > 0.0);
  }
  const SurfaceForceModel s = model_with(Profile::sqrt1p(), wavy());
  CHECK(homogenized_force(s, Vec2::Zero(), 50, field).value.norm() == 0.0);
  CHECK_THROWS_AS(homogenized_force(s, Vec2::Zero(), 1, field), Error);
}

TEST_CASE("homogenized force is anti-monotone") {
  std::mt19937_64 rng(4);
  const RandomCellField field(3, AmplitudeLaw::lognormal(0.0, 0.3));
  for (const Profile& p : all_profiles()) {
    const SurfaceForceModel m = model_with(p, wavy());
    for (int i = 0; i < 50; ++i) {
      const Vec2 z1 = random_vec(rng), z2 = random_vec(rng);
      const Vec2 f1 = homogenized_force(m, z1, 64, field).value, f2 = homogenized_force(m, z2, 64, field).value;
      CHECK((f1 - f2).dot(z1 - z2) <= 1e-14);
    }
  }
}

TEST_CASE("ergodic average of a constant-in-z integrand") {
  const AmplitudeLaw law = AmplitudeLaw::uniform(0.5, 1.5);
  const Box U;
  const Rational eps(1, 64);
  const double bound = 4.0 * law.stddev() / std::sqrt(4096.0);
  int pass = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const RandomCellField field(seed, law);
    const double est = ergodic_average([](const Vec2&, double a) { return a; },
                                       [](const Vec2& x) { return x; }, U, eps, field);
    pass += std::abs(est - 1.0) <= bound;
  }
  CHECK(pass >= 19);
  const RandomCellField field(1, law);
  CHECK(ergodic_average([](const Vec2&, double) { return 0.0; }, [](const Vec2& x) { return x; }, U, eps, field) ==
        0.0);
}

TEST_CASE("deterministic ergodic average is a Riemann sum") {
  const RandomCellField field(1, AmplitudeLaw::uniform(0.5, 1.5));
  auto h = [](const Vec2& z, double) { return z.x() * z.x() + std::sin(z.y()); };
  auto u = [](const Vec2& x) { return Vec2(x.x(), 2.0 * x.y()); };
  // int_0^1 int_0^1 x^2 + sin(2y) = 1/3 + (1 - cos 2) / 2
  const double exact = 1.0 / 3.0 + 0.5 * (1.0 - std::cos(2.0));
  double prev = 1.0;
  for (int n : {8, 16, 32}) {
    const double err = std::abs(ergodic_average(h, u, Box{}, Rational(1, n), field) - exact);
    CHECK(err <= 1.0 / n);
    CHECK(err < prev);
    prev = err;
  }
  // Cells must lie inside U: an offset box keeps only whole cells.
  Box off;
  off.lo = {Rational(1, 10), Rational(0)};
  off.hi = {Rational(9, 10), Rational(1)};
  const double area = ergodic_average([](const Vec2&, double) { return 1.0; }, u, off, Rational(1, 4), field);
  CHECK(area == doctest::Approx(2.0 / 16.0 * 4.0));
}

TEST_CASE("micro surface energy closed forms") {
  const Box D;
  const Rational eps(1, 4);
  const PerforatedMesh mesh = build_perforated_mesh(D, kDisk, eps, 1.0 / 4);
  auto mesh_ptr = std::make_shared<const Mesh>(static_cast<const Mesh&>(mesh));
  auto vs = std::make_shared<const P2Space>(mesh_ptr);
  const RandomCellField field(5, AmplitudeLaw::uniform(0.5, 1.5));

  MixedField v = make_field(vs, nullptr);
  const Vec2 b(0.3, -1.2);
  const SurfaceForceModel lin = model_with(Profile::linear(b));
  CHECK(surface_energy_micro(lin, field, mesh, v) == 0.0);
  CHECK(surface_energy_micro(model_with(Profile::sqrt1p()), field, mesh, v) == 0.0);

  const Vec2 c(0.7, 0.25);
  v.u = interpolate(*vs, [&](const Vec2&) { return c; });
  double mean_a = 0.0;
  for (const LatticeIndex& k : mesh.particles) mean_a += field.amplitude(k);
  mean_a /= mesh.particles.size();
  const double e = eps.to_double();
  const double expected = e * e * mesh.particles.size() * b.dot(c) * kDisk.perimeter() * mean_a;
  CHECK(surface_energy_micro(lin, field, mesh, v) == doctest::Approx(expected).epsilon(1e-10));
  double total = 0.0;
  for (const SurfacePoint& p : surface_quadrature(mesh)) total += p.ds;
  CHECK(total == doctest::Approx(e * mesh.particles.size() * kDisk.perimeter()).epsilon(1e-10));
}

TEST_CASE("micro surface energy approaches the homogenized surface energy") {
  const SurfaceForceModel m = model_with(Profile::sqrt1p(), wavy());
  auto field_fn = [](const Vec2& x) { return Vec2(std::sin(kPi * x.x()) * std::sin(kPi * x.y()), x.x() * x.y()); };
  // Reference: int_D E[a] (int w ds) rho(v(x)) dx by tensor Gauss quadrature.
  const LineRule& g = gauss_legendre(12);
  double ref = 0.0;
  const int panels = 16;
  for (int i = 0; i < panels; ++i)
    for (int j = 0; j < panels; ++j)
      for (std::size_t p = 0; p < g.x.size(); ++p)
        for (std::size_t q = 0; q < g.x.size(); ++q) {
          const Vec2 x((i + g.x[p]) / panels, (j + g.x[q]) / panels);
          ref += g.w[p] * g.w[q] / (panels * panels) * m.potential(field_fn(x));
        }
  std::vector<double> err;
  for (int n : {4, 8, 16}) {
    const PerforatedMesh mesh = build_perforated_mesh(Box{}, kDisk, Rational(1, n), 1.0 / 4);
    auto vs = std::make_shared<const P2Space>(std::make_shared<const Mesh>(static_cast<const Mesh&>(mesh)));
    MixedField v = make_field(vs, nullptr);
    v.u = interpolate(*vs, field_fn);
    err.push_back(std::abs(surface_energy_micro(m, RandomCellField(11, m.law()), mesh, v) - ref));
  }
  MESSAGE("surface energy errors " << err[0] << " " << err[1] << " " << err[2] << " ref " << ref);
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
  CHECK(err[2] <= 0.2 * ref);
}

TEST_CASE("surface energy Hoelder constant stabilizes") {
  const SurfaceForceModel m = model_with(Profile::huber(0.5), wavy(), AmplitudeLaw::lognormal(0.0, 0.5));
  auto fu = [](const Vec2& x) { return Vec2(std::sin(3 * x.x()) + x.y(), std::cos(2 * x.y()) * x.x()); };
  auto fv = [](const Vec2& x) { return Vec2(x.x() * x.x(), -std::sin(x.x() + x.y())); };
  std::vector<double> spread;
  for (int n : {4, 8}) {
    const PerforatedMesh mesh = build_perforated_mesh(Box{}, kDisk, Rational(1, n), 1.0 / 4);
    auto vs = std::make_shared<const P2Space>(std::make_shared<const Mesh>(static_cast<const Mesh&>(mesh)));
    MixedField u = make_field(vs, nullptr), v = make_field(vs, nullptr);
    u.u = interpolate(*vs, fu);
    v.u = interpolate(*vs, fv);
    const NormSet d = norms(mesh, difference(field_fn(u), field_fn(v)));
    const double denom = d.l2 + (1.0 / n) * d.h1_semi;
    const auto pts = surface_quadrature(mesh);
    std::vector<double> c;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const RandomCellField f(seed, m.law());
      c.push_back(std::abs(surface_energy_micro(m, f, mesh, pts, u) - surface_energy_micro(m, f, mesh, pts, v)) /
                  denom);
    }
    double mean = 0.0, var = 0.0;
    for (double x : c) mean += x / c.size();
    for (double x : c) var += (x - mean) * (x - mean) / (c.size() - 1);
    CHECK(std::isfinite(mean));
    spread.push_back(var);
  }
  CHECK(spread[1] < spread[0]);
}

TEST_CASE("pairwise summation") {
  std::vector<double> v(1000);
  for (int i = 0; i < 1000; ++i) v[i] = 1.0 / (i + 1);
  double naive = 0.0;
  for (double x : v) naive += x;
  CHECK(pairwise_sum(v) == doctest::Approx(naive).epsilon(1e-14));
  CHECK(pairwise_sum({}) == 0.0);
}
