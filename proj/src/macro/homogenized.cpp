#include <random>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "homsusp/error.hpp"
#include "homsusp/macro.hpp"

namespace homsusp {

ForceTable::ForceTable(std::function<Vec2(const Vec2&)> fstar, double range, int points_per_side)
    : fstar_(std::move(fstar)), range_(range), n_(points_per_side) {
  require(range > 0.0 && n_ >= 2, ErrorCode::InvalidArgument, "force table needs a positive range and >= 2 points");
  values_.resize(static_cast<std::size_t>(n_) * n_);
  const double h = 2.0 * range_ / (n_ - 1);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) values_[i * n_ + j] = fstar_(Vec2(-range_ + i * h, -range_ + j * h));
}

Vec2 ForceTable::operator()(const Vec2& z) const {
  const double h = 2.0 * range_ / (n_ - 1);
  auto locate = [&](double v, int& i, double& s) {
    const double x = std::clamp((v + range_) / h, 0.0, static_cast<double>(n_ - 1));
    i = std::min(n_ - 2, static_cast<int>(x));
    s = x - i;
  };
  int i, j;
  double s, t;
  locate(z.x(), i, s);
  locate(z.y(), j, t);
  return (1 - s) * (1 - t) * values_[i * n_ + j] + s * (1 - t) * values_[(i + 1) * n_ + j] +
         (1 - s) * t * values_[i * n_ + j + 1] + s * t * values_[(i + 1) * n_ + j + 1];
}

struct MacroSolver::Impl {
  HomogenizedProblem problem;
  std::shared_ptr<const P2Space> vs;
  std::shared_ptr<const PressureSpace> ps;
  ConstraintMap vmap;
  PressureMap pmap;
  StokesForms forms;
  SaddleSystem sys;
  std::unique_ptr<SaddleSolver> solver;
  SpMat B_full;
  Eigen::Matrix3d W;
  std::vector<int> boundary_nodes;
  bool has_force = false;
  bool constant_force = false;
  double amplitude_mean = 0.0;

  Vec2 fstar_exact(const Vec2& z) const {
    if (!has_force) return Vec2::Zero();
    return homogenized_force(*problem.force, z, problem.fstar_samples, problem.field, problem.expectation).value;
  }

  double potential(const Vec2& z) const {
    if (!has_force) return 0.0;
    return amplitude_mean * problem.force->weight_integral() * problem.force->profile().value(z);
  }

  MixedField velocity(const Vec& full) const {
    MixedField f = make_field(vs, ps);
    f.u = full;
    f.flags = kDirichlet;
    return f;
  }

  double h1(const Vec& full) const {
    return norms(vs->mesh(), field_fn(velocity(full)), {}, triangle_rule_deg5()).h1();
  }
};

MacroSolver::MacroSolver(HomogenizedProblem problem) : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  require(problem.mesh != nullptr, ErrorCode::InvalidArgument, "homogenized problem needs a mesh");
  require(problem.picard.theta > 0.0 && problem.picard.theta <= 1.0, ErrorCode::InvalidArgument,
          "Picard damping must lie in (0, 1]");
  s.problem = std::move(problem);
  const HomogenizedProblem& P = s.problem;
  s.W = P.tensor.mandel_tensor();
  s.has_force = P.force.has_value() && !P.force->is_zero();
  s.constant_force = !s.has_force || P.force->profile().kind == Profile::Kind::Linear;
  if (s.has_force) {
    if (P.expectation == Expectation::ClosedForm) {
      s.amplitude_mean = P.force->law().mean();
    } else {
      std::vector<double> a(P.fstar_samples);
      for (int j = 0; j < P.fstar_samples; ++j) a[j] = P.field.draw(static_cast<std::uint64_t>(j), 1u);
      s.amplitude_mean = pairwise_sum(a) / P.fstar_samples;
    }
  }

  const std::shared_ptr<const Mesh> base = P.mesh;
  s.vs = std::make_shared<const P2Space>(base);
  s.ps = std::make_shared<const PressureSpace>(PressureSpace::all_p1(base));
  VelocityConstraintSpec spec;
  spec.dirichlet_box = true;
  s.vmap = build_velocity_constraints(*s.vs, spec);
  s.pmap = build_pressure_map(*s.ps, false, true);
  s.forms.viscosity = Viscosity::tensor(s.W);
  s.forms.viscosity.validate();
  s.forms.body_force = P.body_force;
  s.sys = assemble_stokes(*s.vs, *s.ps, s.vmap, s.pmap, s.forms);
  s.solver = std::make_unique<SaddleSolver>(s.sys, P.solver);
  SpMat K_full;
  assemble_full(*s.vs, *s.ps, s.forms, K_full, s.B_full);
  for (int n = 0; n < s.vs->num_nodes(); ++n)
    if (s.vmap.constrained(2 * n)) s.boundary_nodes.push_back(n);
}

MacroSolver::~MacroSolver() = default;

const HomogenizedProblem& MacroSolver::problem() const { return impl_->problem; }
const std::shared_ptr<const P2Space>& MacroSolver::velocity_space() const { return impl_->vs; }
Vec2 MacroSolver::fstar(const Vec2& z) const { return impl_->fstar_exact(z); }

double MacroSolver::coercivity() const {
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(impl_->W).eigenvalues().minCoeff();
}

bool MacroSolver::admissible(const MixedField& v) const {
  const Impl& s = *impl_;
  if (v.u.size() != s.vs->num_dofs() || !v.u.allFinite()) return false;
  const double scale = v.u.lpNorm<Eigen::Infinity>();
  for (int n : s.boundary_nodes)
    if (v.node_velocity(n).norm() > 1e-12 * scale) return false;
  const Vec div = s.B_full * v.u;
  const Vec ref = s.B_full.cwiseAbs() * v.u.cwiseAbs();
  return div.norm() <= 1e-8 * ref.norm();
}

double MacroSolver::energy(const MixedField& v) const {
  const Impl& s = *impl_;
  if (!admissible(v)) return kInadmissible;
  double e = tensor_energy(v, s.W);
  if (s.problem.body_force) e -= load_work(v, s.problem.body_force);
  if (s.has_force) {
    const Mesh& mesh = s.vs->mesh();
    const TriangleRule& rule = triangle_rule_deg5();
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(mesh.num_triangles()));
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      double sum = 0.0;
      for (int q = 0; q < rule.size(); ++q) sum += rule.w[q] * s.potential(v.velocity(t, rule.bary[q]));
      terms.push_back(mesh.area(t) * sum);
    }
    e += pairwise_sum(terms);
  }
  return e;
}

MixedField MacroSolver::random_admissible(std::uint64_t seed) const {
  const Impl& s = *impl_;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Vec load(s.vmap.reduced_size);
  for (int i = 0; i < load.size(); ++i) load(i) = n(rng);
  const SolveResult r = s.solver->solve(load, Vec::Zero(s.pmap.reduced_size));
  MixedField f = s.velocity(s.vmap.expand(r.u));
  f.u /= s.h1(f.u);
  return f;
}

HomogenizedSolution MacroSolver::solve(const MixedField* initial) const {
  const Impl& s = *impl_;
  const PicardOptions& opt = s.problem.picard;
  const double theta = s.constant_force ? 1.0 : opt.theta;

  std::optional<ForceTable> table;
  const bool tabulate = s.has_force && !s.constant_force &&
                        (s.problem.tabulate || s.problem.expectation == Expectation::MonteCarlo);
  auto force_at = [&](const Vec2& z) { return table ? (*table)(z) : s.fstar_exact(z); };

  Vec u = Vec::Zero(s.vs->num_dofs());
  if (initial) {
    require(initial->u.size() == u.size(), ErrorCode::InvalidArgument, "initial guess lives on another mesh");
    u = initial->u;
  }
  Vec ur = s.vmap.reduce(u);
  Vec pr = Vec::Zero(s.pmap.reduced_size);
  HomogenizedSolution out;
  PicardTrace& trace = out.trace;
  Vec load = Vec::Zero(s.vmap.reduced_size);

  auto nonlinear_load = [&](const Vec& full) {
    if (!s.has_force) return Vec(Vec::Zero(s.vmap.reduced_size));
    const MixedField f = s.velocity(full);
    return s.vmap.restrict_adjoint(assemble_pointwise_load(
        *s.vs, [&](int t, const Eigen::Vector3d& l, const Vec2&) { return force_at(f.velocity(t, l)); }));
  };

  for (int m = 1; m <= opt.max_iterations; ++m) {
    if (tabulate) {
      double umax = 0.0;
      for (int n = 0; n < s.vs->num_nodes(); ++n) umax = std::max(umax, Vec2(u(2 * n), u(2 * n + 1)).norm());
      if (!table || umax > table->range()) {
        const double range = umax > 0.0 ? 2.0 * umax : 1.0;
        table.emplace([&](const Vec2& z) { return s.fstar_exact(z); }, range, s.problem.table_points);
      }
    }
    load = nonlinear_load(u);
    const SolveResult r = s.solver->solve(s.sys.F + load, s.sys.G, &pr);
    const Vec step = theta * (r.u - ur);
    ur += step;
    pr += theta * (r.p - pr);
    const Vec u_new = s.vmap.expand(ur);
    trace.increments.push_back(s.h1(u_new - u));
    u = u_new;
    trace.energies.push_back(energy(s.velocity(u)));
    trace.iterations = m;
    spdlog::debug("picard {}: increment {:.3e} energy {:.12e}", m, trace.increments.back(), trace.energies.back());
    if (trace.increments.back() <= opt.tol) {
      trace.converged = true;
      break;
    }
  }
  if (!trace.converged)
    throw TracedError(ErrorCode::PicardStalled,
                      "PicardStalled: increment " + std::to_string(trace.increments.back()) + " after " +
                          std::to_string(trace.iterations) + " iterations",
                      trace.increments);

  out.u = s.velocity(u);
  out.u.p = s.pmap.expand(pr);
  normalize_pressure(out.u);
  out.energy = trace.energies.back();
  load = nonlinear_load(u);
  const Vec rhs = s.sys.F + load;
  const Vec res_u = s.sys.K * ur + s.sys.B.transpose() * pr - rhs;
  const Vec res_p = s.sys.B * ur - s.sys.G;
  const double scale = std::max(rhs.norm(), 1e-300);
  out.weak_residual = std::sqrt(res_u.squaredNorm() + res_p.squaredNorm()) / scale;
  out.div_residual = (s.B_full * u).norm();
  return out;
}

HomogenizedSolution solve_homogenized(const HomogenizedProblem& problem) {
  return MacroSolver(problem).solve();
}

double energy_star(const MixedField& v, const HomogenizedProblem& problem) {
  return MacroSolver(problem).energy(v);
}

}  // namespace homsusp
