// Acceptance run: one PASS/FAIL line per criterion. `acceptance 3 8` runs a subset.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>

#include <spdlog/spdlog.h>

#include "homsusp/cell.hpp"
#include "homsusp/error.hpp"
#include "homsusp/forces.hpp"
#include "homsusp/macro.hpp"
#include "homsusp/micro.hpp"
#include "homsusp/verify.hpp"
#include "oracles/annulus.hpp"
#include "oracles/manufactured.hpp"

using namespace homsusp;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Mat2 random_deviatoric(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double a = n(rng), b = n(rng);
  Mat2 A;
  A << a, b, b, -a;
  return A;
}

double h1_norm(const MixedField& f) { return norms(f.mesh(), field_fn(f)).h1(); }

double h1_norm(const CellSolver& s, const Vec& u) {
  MixedField f = make_field(s.velocity_space(), nullptr);
  f.u = u;
  return h1_norm(f);
}

std::vector<Mat2> square_group() {
  std::vector<Mat2> g;
  Mat2 rot, ref;
  rot << 0, -1, 1, 0;
  ref << 1, 0, 0, -1;
  Mat2 r = Mat2::Identity();
  for (int k = 0; k < 4; ++k) {
    g.push_back(r);
    g.push_back(r * ref);
    r = rot * r;
  }
  return g;
}

Vec2 vortex(const Vec2& x) {
  const Vec2 r = x - Vec2(0.5, 0.5);
  const double g = 20.0 * std::exp(-r.squaredNorm() / 0.04);
  return Vec2(-r.y() * g, r.x() * g);
}

SurfaceForceModel sqrt1p_model(double mean) {
  SurfaceWeight w;
  w.mean = mean;
  return SurfaceForceModel(InclusionShape::disk(0.1), Profile::sqrt1p(), w, AmplitudeLaw::uniform(0.5, 1.5));
}

Outcome cell_exactness() {
  const double mu = 1.0;
  auto mesh = std::make_shared<const CellMesh>(build_cell_mesh(InclusionShape::disk(0.1), 1.0 / 16));
  const CellSolver solver(mesh, mu);
  const double zero = h1_norm(solver.solve(Mat2::Zero()).chi);

  std::mt19937_64 rng(2024);
  const Mat2 A = random_deviatoric(rng);
  const CellSolution s1 = solver.solve(A), s2 = solver.solve(2.0 * A);
  const double linear = (s2.chi.u - 2.0 * s1.chi.u).norm() / (2.0 * s1.chi.u.norm());

  std::normal_distribution<double> n(0.0, 1.0);
  const double scale = h1_norm(s1.chi);
  double orth = 0.0;
  for (int k = 0; k < 20; ++k) {
    Vec load(solver.reduced_size());
    for (int i = 0; i < load.size(); ++i) load(i) = n(rng);
    const Vec phi = solver.k0_field(load);
    orth = std::max(orth, std::abs(solver.variational_residual(s1, phi)) / (mu * scale * h1_norm(solver, phi)));
  }
  return {zero <= 1e-12 && linear <= 1e-10 && orth <= 1e-8,
          fmt("|chi_0|_H1 = %.1e (<= 1e-12), linearity %.1e (<= 1e-10), orthogonality %.1e over 20 K_0 fields (<= 1e-8)",
              zero, linear, orth)};
}

Outcome tensor_structure() {
  const auto t0 = Clock::now();
  const double mu = 1.0;
  auto mesh = std::make_shared<const CellMesh>(build_cell_mesh(InclusionShape::disk(0.1), 1.0 / 64));
  const CellSolver solver(mesh, mu);
  const EffectiveTensor T = effective_tensor(solver).tensor;
  const double sym = T.symmetry_defect / T.C_raw.norm();
  const double psd = T.min_eigenvalue / T.C.trace();

  std::mt19937_64 rng(99);
  int dominated = 0;
  for (int k = 0; k < 100; ++k) {
    const Mat2 A = random_deviatoric(rng);
    dominated += frobenius(T.apply(A), A) >= mu * A.squaredNorm();
  }

  const std::vector<Mat2> basis = deviatoric_basis();
  double invariance = 0.0;
  for (const Mat2& g : square_group()) {
    std::vector<CellSolution> sols;
    for (const Mat2& e : basis) sols.push_back(solver.solve(g * e * g.transpose()));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        invariance = std::max(invariance, std::abs(solver.flux_form(sols[a], g * basis[b] * g.transpose()) -
                                                   T.C_raw(a, b)) / T.C_raw.norm());
  }
  const double secs = seconds_since(t0);
  return {sym <= 1e-8 && psd >= -1e-10 && dominated == 100 && invariance <= 1e-6 && secs < 60.0,
          fmt("h = 1/64: symmetry %.1e (<= 1e-8), lambda_min/tr %.3e (>= -1e-10), mu*A:A >= muA:A %d/100, "
              "D4 invariance %.1e (<= 1e-6), %.1f s (< 60 s)",
              sym, psd, dominated, invariance, secs)};
}

Outcome dilute_limit() {
  const std::vector<double> phi{0.005, 0.01, 0.02};
  const DiluteReport r = dilute_study(InclusionShape::disk(0.01), phi, {1.0 / 16, 1.0 / 32});
  // Single-disk limit of the analytic annulus solution: d(excess)/d(phi) at phi = 0.
  const double tiny = 1e-7;
  const double oracle_slope = oracle::annulus_viscosity_excess(tiny) / tiny;
  const double chord = (oracle::annulus_viscosity_excess(0.02) - oracle::annulus_viscosity_excess(0.005)) / 0.015;
  const double rel = std::abs(r.slope - oracle_slope) / oracle_slope;
  double disc = 0.0;
  for (double d : r.discretization_error) disc = std::max(disc, d);
  return {rel <= 0.1,
          fmt("slope %.4f (Richardson; finest mesh %.4f, max discretization error %.1e) vs oracle %.4f: %.1f%% "
              "(<= 10%%); annulus chord slope over the same phi %.4f",
              r.slope, r.slope_finest, disc, oracle_slope, 100 * rel, chord)};
}

Outcome ergodic() {
  const AmplitudeLaw law = AmplitudeLaw::uniform(0.5, 1.5);
  const double bound = 4.0 * law.stddev() / std::sqrt(4096.0);
  int pass = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double est = ergodic_average([](const Vec2&, double a) { return a; }, [](const Vec2& x) { return x; },
                                       Box{}, Rational(1, 64), RandomCellField(seed, law));
    pass += std::abs(est - 1.0) <= bound;
    worst = std::max(worst, std::abs(est - 1.0));
  }
  return {pass >= 19, fmt("%d/20 seeds within %.4f (>= 95%%), worst deviation %.4f", pass, bound, worst)};
}

Outcome fstar_oracle() {
  const Vec2 b(0.7, -0.4);
  const AmplitudeLaw law = AmplitudeLaw::uniform(0.5, 1.5);
  const InclusionShape shape = InclusionShape::disk(0.1);
  const SurfaceForceModel lin(shape, Profile::linear(b), SurfaceWeight{}, law);
  const double perimeter = 2.0 * kPi * std::sqrt(0.1 / kPi);
  const Vec2 exact = -law.mean() * perimeter * b;
  int ok = 0, total = 0;
  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3})
    for (const Vec2& z : {Vec2(0, 0), Vec2(1, -1), Vec2(-2, 0.5), Vec2(3, 3)}) {
      const ForceEstimate e = homogenized_force(lin, z, 2000, RandomCellField(seed, law));
      const Vec2 err = (e.value - exact).cwiseAbs();
      ok += err.x() <= 3 * e.half_width.x() && err.y() <= 3 * e.half_width.y();
      ++total;
      worst = std::max(worst, std::max(err.x() / e.half_width.x(), err.y() / e.half_width.y()));
    }
  const SurfaceForceModel zero(shape, Profile::none(), SurfaceWeight{}, law);
  double zero_norm = 0.0;
  for (const Vec2& z : {Vec2(0, 0), Vec2(1, -1)})
    zero_norm = std::max(zero_norm, homogenized_force(zero, z, 100, RandomCellField(1, law)).value.norm());
  return {ok == total && zero_norm == 0.0,
          fmt("linear(b): %d/%d points within 3 half-widths (worst %.2f), g = 0 gives |f*| = %g", ok, total, worst,
              zero_norm)};
}

std::optional<ConvergenceReport> sweep_cache;
double sweep_seconds = 0.0;

const ConvergenceReport& sweep() {
  if (!sweep_cache) {
    ConvergenceConfig c;
    c.shape = InclusionShape::disk(0.1);
    c.force = sqrt1p_model(1.0);
    c.body_force = vortex;
    c.body_force_name = "vortex";
    c.h_per_cell = 1.0 / 16;
    c.macro_h = 1.0 / 64;
    c.picard.theta = 1.0;
    c.picard.tol = 1e-9;
    const auto t0 = Clock::now();
    sweep_cache = convergence_study(c);
    sweep_seconds = seconds_since(t0);
    std::fputs(convergence_table(*sweep_cache).str().c_str(), stdout);
  }
  return *sweep_cache;
}

Outcome energy_limit() {
  const ConvergenceReport& r = sweep();
  const int l2 = r.seeds_decreasing(&ConvergenceRow::l2);
  const int energy = r.seeds_decreasing(&ConvergenceRow::energy_gap);
  return {l2 >= 2 && energy >= 2 && sweep_seconds <= 1800.0,
          fmt("L2 gap decreasing for %d/3 seeds, energy gap decreasing for %d/3 seeds (>= 2 each); sweep %.0f s "
              "(<= 1800 s)",
              l2, energy, sweep_seconds)};
}

Outcome corrector_gain() {
  const ConvergenceReport& r = sweep();
  const int better = r.rows_corrector_better();
  const int decreasing = r.seeds_decreasing(&ConvergenceRow::corrected_h1);
  double worst = 0.0;
  for (const auto& row : r.rows) worst = std::max(worst, row.corrected_h1 / row.h1);
  return {better == static_cast<int>(r.rows.size()) && decreasing >= 2,
          fmt("corrected < plain H1 gap in %d/%zu rows (worst ratio %.3f), corrected gap decreasing for %d/3 seeds",
              better, r.rows.size(), worst, decreasing)};
}

VectorFn random_smooth(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::array<double, 4>> modes;
  for (int j = 1; j <= 3; ++j)
    for (int k = 1; k <= 3; ++k) modes.push_back({double(j), double(k), n(rng) / (j + k), n(rng) / (j + k)});
  return [modes](const Vec2& x) {
    Vec2 v = Vec2::Zero();
    for (const auto& m : modes) {
      const double s = std::sin(m[0] * kPi * x.x()) * std::sin(m[1] * kPi * x.y());
      v += s * Vec2(m[2], m[3]);
    }
    return v;
  };
}

Outcome projection_bound() {
  const std::vector<Rational> eps{Rational(1, 4), Rational(1, 8), Rational(1, 16)};
  const std::vector<std::uint64_t> seeds{11, 12, 13};
  std::vector<double> C;
  std::string per;
  int admissible = 0, total = 0;
  for (const Rational& e : eps) {
    const auto mesh = std::make_shared<const PerforatedMesh>(
        build_perforated_mesh(Box{}, InclusionShape::disk(0.1), e, 1.0 / 8));
    MicroProblem P;
    P.mesh = mesh;
    const MicroSolver checker(P);
    double worst = 0.0;
    for (std::uint64_t s : seeds) {
      const ProjectionReport r = project_to_Veps(random_smooth(s), *mesh);
      admissible += checker.admissible(r.projected);
      ++total;
      worst = std::max(worst, r.constant());
    }
    C.push_back(worst);
    per += fmt("%sC(%s) = %.3f", per.empty() ? "" : ", ", e.str().c_str(), worst);
  }
  const double ratio = *std::max_element(C.begin(), C.end()) / *std::min_element(C.begin(), C.end());
  return {ratio <= 3.0 && admissible == total,
          fmt("%s; max/min %.3f (<= 3); projections admissible %d/%d", per.c_str(), ratio, admissible, total)};
}

Outcome minimality() {
  MicroProblem P;
  P.mesh = std::make_shared<const PerforatedMesh>(
      build_perforated_mesh(Box{}, InclusionShape::disk(0.1), Rational(1, 8), 1.0 / 8));
  P.force = sqrt1p_model(4.0);
  P.body_force = vortex;
  P.picard.theta = 1.0;
  P.picard.tol = 1e-10;
  const MicroSolver solver(P);
  const RandomCellField field(5, AmplitudeLaw::uniform(0.5, 1.5));
  const MicroSolution s = solver.solve(field);
  int below = 0;
  double margin = kInadmissible;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const double e = solver.energy(solver.random_admissible(500 + seed), field);
    below += s.energy <= e;
    margin = std::min(margin, e - s.energy);
  }
  MixedField start = solver.random_admissible(77);
  start.u *= 10.0;
  const MicroSolution t = solver.solve(field, &start);
  MixedField diff = s.u;
  diff.u -= t.u.u;
  const double gap = h1_norm(diff);
  return {below == 10 && gap <= 10 * P.picard.tol,
          fmt("E(u) <= E(v) for %d/10 admissible v (min margin %.3e); two initializations differ by %.1e in H1 "
              "(<= %.0e)",
              below, margin, gap, 10 * P.picard.tol)};
}

Outcome fem_baseline() {
  const double mu = 1.0;
  const VectorFn force = [mu](const Vec2& x) {
    double fx, fy;
    oracle::manufactured_force(mu, x.x(), x.y(), fx, fy);
    return Vec2(fx, fy);
  };
  const FieldFn exact = [](int, const Eigen::Vector3d&, const Vec2& x) {
    const auto e = oracle::manufactured(x.x(), x.y());
    FieldSample s;
    s.value = Vec2(e.u, e.v);
    s.grad << e.ux, e.uy, e.vx, e.vy;
    return s;
  };
  std::vector<double> err;
  double identity = 0.0;
  for (int n : {4, 8, 16, 32}) {
    auto mesh = std::make_shared<const Mesh>(static_cast<Mesh>(build_macro_mesh(Box{}, 1.0 / n)));
    auto vs = std::make_shared<const P2Space>(mesh);
    auto ps = std::make_shared<const PressureSpace>(PressureSpace::all_p1(mesh));
    VelocityConstraintSpec spec;
    spec.dirichlet_box = true;
    StokesForms forms;
    forms.viscosity = Viscosity::scalar(mu);
    forms.body_force = force;
    forms.pressure_mass = true;
    const MixedField f = solve_stokes(vs, ps, build_velocity_constraints(*vs, spec), build_pressure_map(*ps, false, true),
                                      forms, {}, kDirichlet | kZeroMeanPressure);
    err.push_back(norms(*mesh, difference(field_fn(f), exact)).l2);
    const double rhs = load_work(f, force);
    identity = std::max(identity, std::abs(2.0 * strain_energy(f, mu) - rhs) / std::abs(rhs));
  }
  double rate = 1e9;
  std::string rates;
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double r = std::log2(err[i - 1] / err[i]);
    rate = std::min(rate, r);
    rates += fmt(" %.3f", r);
  }
  return {rate >= 2.7 && identity <= 1e-10,
          fmt("L2 velocity rates%s (>= 2.7); energy identity %.1e (<= 1e-10)", rates.c_str(), identity)};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"cell-problem exactness", cell_exactness},
      {"effective-tensor structure", tensor_structure},
      {"dilute limit (2D)", dilute_limit},
      {"ergodic averaging", ergodic},
      {"homogenized-force oracle", fstar_oracle},
      {"eps -> 0 limit", energy_limit},
      {"corrector gain", corrector_gain},
      {"projection onto V^eps", projection_bound},
      {"minimality and uniqueness", minimality},
      {"FEM baseline", fem_baseline},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%s: %d failed\n", failed ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED", failed);
  return failed ? 1 : 0;
}
