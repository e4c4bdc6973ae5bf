#include <filesystem>
#include <random>
#include <set>

#include <doctest.h>
#include <Eigen/Eigenvalues>

#include "homsusp/error.hpp"
#include "homsusp/fem.hpp"
#include "oracles/manufactured.hpp"

using namespace homsusp;

namespace {

struct Setup {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const P2Space> vs;
  std::shared_ptr<const PressureSpace> ps;
};

Setup unit_square(int n) {
  Setup s;
  MacroMesh m = build_macro_mesh(Box{}, 1.0 / n);
  s.mesh = std::make_shared<const Mesh>(static_cast<Mesh>(m));
  s.vs = std::make_shared<const P2Space>(s.mesh);
  s.ps = std::make_shared<const PressureSpace>(PressureSpace::all_p1(s.mesh));
  return s;
}

FieldFn exact_velocity() {
  return [](int, const Eigen::Vector3d&, const Vec2& x) {
    const auto e = oracle::manufactured(x.x(), x.y());
    FieldSample s;
    s.value = Vec2(e.u, e.v);
    s.grad << e.ux, e.uy, e.vx, e.vy;
    return s;
  };
}

double pressure_error(const MixedField& f) {
  const Mesh& m = f.mesh();
  const TriangleRule& rule = triangle_rule_collapsed(5);
  double e = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t)
    for (int q = 0; q < rule.size(); ++q) {
      const Vec2 x = to_physical(m, t, rule.bary[q]);
      const double d = f.pressure(t, rule.bary[q]) - oracle::manufactured(x.x(), x.y()).p;
      e += m.area(t) * rule.w[q] * d * d;
    }
  return std::sqrt(e);
}

MixedField solve_manufactured(const Setup& s, double mu, SolverOptions opt = {}) {
  VelocityConstraintSpec spec;
  spec.dirichlet_box = true;
  const ConstraintMap vmap = build_velocity_constraints(*s.vs, spec);
  const PressureMap pmap = build_pressure_map(*s.ps, false, true);
  StokesForms forms;
  forms.viscosity = Viscosity::scalar(mu);
  forms.body_force = [mu](const Vec2& x) {
    double fx, fy;
    oracle::manufactured_force(mu, x.x(), x.y(), fx, fy);
    return Vec2(fx, fy);
  };
  forms.pressure_mass = true;
  MixedField f = solve_stokes(s.vs, s.ps, vmap, pmap, forms, opt, kDirichlet | kZeroMeanPressure);
  normalize_pressure(f);
  return f;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("P2 basis is a partition of unity with exact gradients") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mesh m;
  m.vertices = {Vec2(0.1, 0.2), Vec2(1.3, 0.4), Vec2(0.5, 1.1)};
  m.triangles = {{0, 1, 2}};
  m.region = {Region::Fluid};
  const BaryGrad g = barycentric_gradients(m, 0);
  for (int i = 0; i < 20; ++i) {
    double a = u(rng), b = u(rng) * (1 - a);
    const Eigen::Vector3d l(a, b, 1 - a - b);
    const auto n = p2_values(l);
    double sum = 0.0;
    for (double v : n) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    const P2Grad dn = p2_gradients(l, g);
    CHECK(dn.colwise().sum().norm() < 1e-12);
  }
  CHECK(triangle_rule_deg5().size() == 7);
  double w = 0.0;
  for (double x : triangle_rule_collapsed(4).w) w += x;
  CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("manufactured Stokes solution converges at the optimal rates") {
  std::vector<double> ev, ep;
  for (int n : {4, 8, 16, 32}) {
    const Setup s = unit_square(n);
    const MixedField f = solve_manufactured(s, 1.0);
    ev.push_back(norms(*s.mesh, difference(field_fn(f), exact_velocity())).l2);
    ep.push_back(pressure_error(f));
    CHECK(std::abs(pressure_mean(f)) <= 1e-10 * (1.0 + f.p.norm()));
    // energy identity with phi = u and homogeneous boundary data
    const double lhs = 2.0 * strain_energy(f, 1.0);
    const double rhs = load_work(f, [](const Vec2& x) {
      double fx, fy;
      oracle::manufactured_force(1.0, x.x(), x.y(), fx, fy);
      return Vec2(fx, fy);
    });
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
  }
  for (std::size_t i = 1; i < ev.size(); ++i) {
    CAPTURE(i);
    CHECK(std::log2(ev[i - 1] / ev[i]) >= 2.7);
    CHECK(std::log2(ep[i - 1] / ep[i]) >= 1.7);
  }
}

TEST_CASE("lid-driven cavity is discretely divergence free") {
  const Setup s = unit_square(8);
  VelocityConstraintSpec spec;
  spec.dirichlet_box = true;
  spec.boundary_value = [](const Vec2& x) {
    const bool lid = x.y() > 1.0 - 1e-12 && x.x() > 1e-12 && x.x() < 1.0 - 1e-12;
    return lid ? Vec2(1.0, 0.0) : Vec2(0.0, 0.0);
  };
  const ConstraintMap vmap = build_velocity_constraints(*s.vs, spec);
  const PressureMap pmap = build_pressure_map(*s.ps, false, true);
  StokesForms forms;
  const MixedField f = solve_stokes(s.vs, s.ps, vmap, pmap, forms);
  SpMat K, B;
  assemble_full(*s.vs, *s.ps, forms, K, B);
  CHECK((B * f.u).norm() <= 1e-8);
  CHECK(f.u.norm() > 0.1);
}

TEST_CASE("identity viscosity tensor reproduces the scalar system") {
  const Setup s = unit_square(4);
  StokesForms a, b;
  a.viscosity = Viscosity::scalar(1.7);
  b.viscosity = Viscosity::tensor(1.7 * Eigen::Matrix3d::Identity());
  SpMat Ka, Ba, Kb, Bb;
  assemble_full(*s.vs, *s.ps, a, Ka, Ba);
  assemble_full(*s.vs, *s.ps, b, Kb, Bb);
  CHECK(SpMat(Ka - Kb).norm() <= 1e-12 * Ka.norm());
  CHECK(code_of([] { Viscosity::scalar(0.0).validate(); }) == ErrorCode::SingularViscosity);
  Eigen::Matrix3d w = Eigen::Matrix3d::Identity();
  w(2, 2) = -1.0;
  CHECK(code_of([&] { Viscosity::tensor(w).validate(); }) == ErrorCode::SingularViscosity);
}

TEST_CASE("zero data gives the zero field") {
  const Setup s = unit_square(4);
  VelocityConstraintSpec spec;
  spec.dirichlet_box = true;
  const ConstraintMap vmap = build_velocity_constraints(*s.vs, spec);
  const PressureMap pmap = build_pressure_map(*s.ps, false, true);
  const MixedField f = solve_stokes(s.vs, s.ps, vmap, pmap, StokesForms{});
  CHECK(f.u.norm() == 0.0);
  CHECK(f.p.norm() == 0.0);
}

TEST_CASE("indefinite velocity block is rejected") {
  const Setup s = unit_square(4);
  VelocityConstraintSpec spec;
  spec.dirichlet_box = true;
  const ConstraintMap vmap = build_velocity_constraints(*s.vs, spec);
  const PressureMap pmap = build_pressure_map(*s.ps, false, true);
  SaddleSystem sys = assemble_stokes(*s.vs, *s.ps, vmap, pmap, StokesForms{});
  SpMat shift(sys.K.rows(), sys.K.cols());
  shift.setIdentity();
  sys.K -= 1e3 * shift;
  try {
    SaddleSolver solver(sys);
    FAIL("expected SolverDiverged");
  } catch (const TracedError& e) {
    CHECK(e.code() == ErrorCode::SolverDiverged);
  }
}

TEST_CASE("Uzawa and direct paths agree") {
  const Setup s = unit_square(8);
  SolverOptions uz;
  uz.method = SolverOptions::Method::Uzawa;
  const MixedField a = solve_manufactured(s, 1.0);
  const MixedField b = solve_manufactured(s, 1.0, uz);
  CHECK((a.u - b.u).norm() <= 1e-8 * a.u.norm());
  CHECK((a.p - b.p).norm() <= 1e-6 * a.p.norm());
}

TEST_CASE("matrix dump") {
  const auto dir = std::filesystem::temp_directory_path() / "homsusp_fem_dump";
  std::filesystem::create_directories(dir);
  SolverOptions opt;
  opt.dump_prefix = (dir / "sys").string();
  solve_manufactured(unit_square(2), 1.0, opt);
  CHECK(std::filesystem::exists(dir / "sys_K.mtx"));
  CHECK(std::filesystem::exists(dir / "sys_B.mtx"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("discrete inf-sup constant is mesh independent") {
  std::vector<double> beta;
  for (int n : {2, 4, 8}) {
    const Setup s = unit_square(n);
    VelocityConstraintSpec spec;
    spec.dirichlet_box = true;
    const ConstraintMap vmap = build_velocity_constraints(*s.vs, spec);
    const PressureMap pmap = build_pressure_map(*s.ps, false, false);
    StokesForms forms;
    forms.form = StrainForm::Gradient;
    forms.pressure_mass = true;
    const SaddleSystem sys = assemble_stokes(*s.vs, *s.ps, vmap, pmap, forms);
    const Eigen::MatrixXd K(sys.K), B(sys.B), M(sys.Mp);
    const Eigen::MatrixXd S = B * K.ldlt().solve(B.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, M);
    // the constant pressure is the single zero mode
    CHECK(es.eigenvalues()(0) <= 1e-10);
    beta.push_back(std::sqrt(es.eigenvalues()(1)));
  }
  CHECK(beta[0] > 0.1);
  for (double b : beta) CHECK(b >= 0.9 * beta[0]);
}

TEST_CASE("rigid particle is represented by three dofs and moves rigidly") {
  const PerforatedMesh pm = build_perforated_mesh(Box{}, InclusionShape::disk(0.1), Rational(1, 2), 0.1);
  REQUIRE(pm.particles.size() == 1);
  auto mesh = std::make_shared<const Mesh>(static_cast<const Mesh&>(pm));
  auto vs = std::make_shared<const P2Space>(mesh);
  auto ps = std::make_shared<const PressureSpace>(PressureSpace::fluid_p1(mesh));
  const auto rigid_nodes = vs->region_nodes(Region::Rigid);
  RigidGroup g;
  g.center = pm.centers[0];
  for (int n = 0; n < vs->num_nodes(); ++n)
    if (rigid_nodes[n]) g.nodes.push_back(n);
  VelocityConstraintSpec spec;
  spec.dirichlet_box = true;
  spec.rigid = {g};
  const ConstraintMap vmap = build_velocity_constraints(*vs, spec);
  CHECK(vmap.rigid_dofs[0][0] >= 0);
  CHECK(vmap.rigid_dofs[0][1] >= 0);
  CHECK(vmap.rigid_dofs[0][2] >= 0);
  std::set<int> cols;
  for (int n : g.nodes)
    for (int c = 0; c < 2; ++c)
      for (int k = vmap.ptr[2 * n + c]; k < vmap.ptr[2 * n + c + 1]; ++k) cols.insert(vmap.col[k]);
  CHECK(cols.size() == 3);

  const PressureMap pmap = build_pressure_map(*ps, false, true);
  StokesForms forms;
  forms.body_force = [](const Vec2& x) { return Vec2(1.0 + x.y(), -x.x() * x.x()); };
  const MixedField f = solve_stokes(vs, ps, vmap, pmap, forms);
  // fit a rigid motion from two nodes and compare everywhere on the particle
  const Vec2 c = g.center;
  const int a = g.nodes.front();
  const Vec2 ua = f.node_velocity(a);
  double spin = 0.0;
  int b = -1;
  for (int n : g.nodes)
    if ((vs->node(n) - vs->node(a)).norm() > 0.1) b = n;
  REQUIRE(b >= 0);
  const Vec2 d = vs->node(b) - vs->node(a);
  const Vec2 du = f.node_velocity(b) - ua;
  spin = (d.x() * du.y() - d.y() * du.x()) / d.squaredNorm();
  RigidMotion rm{spin, ua - spin * Vec2(-(vs->node(a) - c).y(), (vs->node(a) - c).x()), c};
  double worst = 0.0;
  for (int n : g.nodes) worst = std::max(worst, (f.node_velocity(n) - rm(vs->node(n))).norm());
  CHECK(worst <= 1e-9 * (1.0 + f.u.lpNorm<Eigen::Infinity>()));
  CHECK((rm.skew() + rm.skew().transpose()).norm() == 0.0);
  std::vector<char> rigid_mask(mesh->num_triangles());
  for (int t = 0; t < mesh->num_triangles(); ++t) rigid_mask[t] = mesh->region[t] == Region::Rigid;
  CHECK(norms(*mesh, field_fn(f), rigid_mask).strain <= 1e-9 * norms(*mesh, field_fn(f)).h1_semi);

  // a prescribed zero strain is the same free rigid motion
  spec.rigid[0].strain = Mat2::Zero();
  const ConstraintMap vmap0 = build_velocity_constraints(*vs, spec);
  CHECK(vmap0.offset.norm() == 0.0);
}

TEST_CASE("periodic constraints") {
  const CellMesh cm = build_cell_mesh(InclusionShape::disk(0.1), 0.125);
  auto mesh = std::make_shared<const Mesh>(static_cast<const Mesh&>(cm));
  const P2Space vs(mesh);
  VelocityConstraintSpec spec;
  spec.periodic = true;
  const ConstraintMap vmap = build_velocity_constraints(vs, spec);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Vec r(vmap.reduced_size);
  for (int i = 0; i < r.size(); ++i) r(i) = nd(rng);
  const Vec u = vmap.expand(r);
  const PeriodicPairing pairing = periodic_pairing(vs.nodes());
  for (int n = 0; n < vs.num_nodes(); ++n) {
    CHECK(u(2 * n) == u(2 * pairing.master[n]));
    CHECK(u(2 * n + 1) == u(2 * pairing.master[n] + 1));
  }
  // adjoint consistency
  Vec w(vmap.full_size);
  for (int i = 0; i < w.size(); ++i) w(i) = nd(rng);
  CHECK(std::abs(w.dot(u - vmap.offset) - vmap.restrict_adjoint(w).dot(r)) <= 1e-10 * w.norm() * u.norm());

  RigidGroup g;
  const auto rigid = vs.region_nodes(Region::Rigid);
  for (int n = 0; n < vs.num_nodes(); ++n)
    if (rigid[n]) g.nodes.push_back(n);
  g.strain << 1.0, 0.0, 0.0, 0.0;
  spec.rigid = {g};
  CHECK(code_of([&] { build_velocity_constraints(vs, spec); }) == ErrorCode::NonTraceFreeStrain);
}
