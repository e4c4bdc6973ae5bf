#include <mutex>
#include <random>

#include <spdlog/spdlog.h>

#include "homsusp/error.hpp"
#include "homsusp/micro.hpp"

namespace homsusp {

std::vector<std::vector<int>> particle_triangles(const PerforatedMesh& mesh) {
  std::vector<std::vector<int>> out(mesh.particles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    if (mesh.region[t] == Region::Rigid && mesh.particle_of[t] >= 0) out[mesh.particle_of[t]].push_back(t);
  return out;
}

RigidMotion rigid_l2_fit(const MixedField& v, const std::vector<int>& triangles, const Vec2& center,
                         double* defect) {
  const Mesh& mesh = v.mesh();
  const TriangleRule& rule = triangle_rule_deg5();
  // Unknowns (m_x, m_y, spin); basis e_x, e_y, (x - c)^perp.
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  double vv = 0.0;
  for (int t : triangles)
    for (int q = 0; q < rule.size(); ++q) {
      const double w = mesh.area(t) * rule.w[q];
      const Vec2 r = to_physical(mesh, t, rule.bary[q]) - center;
      Eigen::Matrix<double, 2, 3> P;
      P << 1.0, 0.0, -r.y(), 0.0, 1.0, r.x();
      const Vec2 val = v.velocity(t, rule.bary[q]);
      M += w * P.transpose() * P;
      b += w * P.transpose() * val;
      vv += w * val.squaredNorm();
    }
  RigidMotion rm;
  rm.center = center;
  if (triangles.empty()) {
    if (defect) *defect = 0.0;
    return rm;
  }
  const Eigen::Vector3d c = M.ldlt().solve(b);
  rm.translation = c.head<2>();
  rm.spin = c(2);
  if (defect) {
    double dd = 0.0;
    for (int t : triangles)
      for (int q = 0; q < rule.size(); ++q) {
        const Vec2 x = to_physical(mesh, t, rule.bary[q]);
        dd += mesh.area(t) * rule.w[q] * (v.velocity(t, rule.bary[q]) - rm(x)).squaredNorm();
      }
    *defect = vv > 0.0 ? std::sqrt(dd / vv) : 0.0;
  }
  return rm;
}

struct MicroSolver::Impl {
  MicroProblem problem;
  std::shared_ptr<const P2Space> vs;
  std::shared_ptr<const PressureSpace> ps;
  ConstraintMap vmap;
  PressureMap pmap;
  StokesForms forms;
  SaddleSystem sys;
  mutable std::unique_ptr<SaddleSolver> solver;
  mutable std::once_flag factorized;
  SpMat B_full;
  std::vector<int> boundary_nodes;
  std::vector<std::vector<int>> group_nodes;
  std::vector<std::vector<int>> group_triangles;
  std::vector<SurfacePoint> points;
  bool has_force = false;
  bool constant_force = false;

  const PerforatedMesh& mesh() const { return *problem.mesh; }

  // Energy evaluation alone never needs the factorization.
  const SaddleSolver& factor() const {
    std::call_once(factorized, [&] { solver = std::make_unique<SaddleSolver>(sys, problem.solver); });
    return *solver;
  }

  MixedField velocity(const Vec& full) const {
    MixedField f = make_field(vs, ps);
    f.u = full;
    f.flags = kDirichlet | kRigidPerParticle;
    return f;
  }

  double h1(const Vec& full) const {
    const MixedField f = velocity(full);
    return norms(vs->mesh(), field_fn(f), {}, triangle_rule_deg5()).h1();
  }

  std::vector<double> amplitudes(const RandomCellField& field) const {
    std::vector<double> a(mesh().particles.size());
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = field.amplitude(mesh().particles[k]);
    return a;
  }

  /// Full vector of sum_q eps grad g(v(x_q)) . phi(x_q) ds_q.
  Vec surface_gradient(const Vec& full, const std::vector<double>& amp) const {
    Vec out = Vec::Zero(vs->num_dofs());
    if (!has_force) return out;
    const MixedField f = velocity(full);
    const double eps = mesh().eps.to_double();
    for (const SurfacePoint& p : points) {
      const Vec2 g = problem.force->grad_g(p.t, f.velocity(p.triangle, p.bary), amp[p.particle]);
      const auto n = p2_values(p.bary);
      const auto& el = vs->element(p.triangle);
      for (int a = 0; a < 6; ++a) out.segment<2>(2 * el[a]) += eps * p.ds * n[a] * g;
    }
    return out;
  }
};

MicroSolver::MicroSolver(MicroProblem problem) : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  require(problem.mesh != nullptr, ErrorCode::InvalidArgument, "micro problem needs a mesh");
  require(problem.mu > 0.0, ErrorCode::SingularViscosity, "viscosity must be positive");
  require(problem.picard.theta > 0.0 && problem.picard.theta <= 1.0, ErrorCode::InvalidArgument,
          "Picard damping must lie in (0, 1]");
  s.problem = std::move(problem);
  const PerforatedMesh& mesh = s.mesh();
  s.has_force = s.problem.force.has_value() && !s.problem.force->is_zero();
  s.constant_force = !s.has_force || s.problem.force->profile().kind == Profile::Kind::Linear;

  const std::shared_ptr<const Mesh> base = s.problem.mesh;
  s.vs = std::make_shared<const P2Space>(base);
  s.ps = std::make_shared<const PressureSpace>(PressureSpace::fluid_p1(base));

  s.group_triangles = particle_triangles(mesh);
  VelocityConstraintSpec spec;
  spec.dirichlet_box = true;
  std::vector<char> seen(s.vs->num_nodes(), 0);
  for (std::size_t k = 0; k < s.group_triangles.size(); ++k) {
    RigidGroup g;
    g.center = mesh.centers[k];
    for (int t : s.group_triangles[k])
      for (int n : s.vs->element(t))
        if (!seen[n]) {
          seen[n] = 1;
          g.nodes.push_back(n);
        }
    s.group_nodes.push_back(g.nodes);
    spec.rigid.push_back(std::move(g));
  }
  s.vmap = build_velocity_constraints(*s.vs, spec);
  s.pmap = build_pressure_map(*s.ps, false, true);
  s.forms.viscosity = Viscosity::scalar(s.problem.mu);
  s.forms.body_force = s.problem.body_force;
  s.forms.pressure_mass = true;
  s.sys = assemble_stokes(*s.vs, *s.ps, s.vmap, s.pmap, s.forms);
  {
    SpMat K_full;
    assemble_full(*s.vs, *s.ps, s.forms, K_full, s.B_full);
  }
  for (int n = 0; n < s.vs->num_nodes(); ++n)
    if (s.vmap.constrained(2 * n) && !seen[n]) s.boundary_nodes.push_back(n);
  s.points = surface_quadrature(mesh);
  spdlog::debug("micro solver: {} particles, {} velocity + {} pressure unknowns", mesh.particles.size(),
                s.vmap.reduced_size, s.pmap.reduced_size);
}

MicroSolver::~MicroSolver() = default;

const MicroProblem& MicroSolver::problem() const { return impl_->problem; }
const std::shared_ptr<const P2Space>& MicroSolver::velocity_space() const { return impl_->vs; }
const std::vector<SurfacePoint>& MicroSolver::surface_points() const { return impl_->points; }

RigidMotion MicroSolver::fit_rigid(const MixedField& v, int particle, double* defect) const {
  const Impl& s = *impl_;
  require(particle >= 0 && particle < static_cast<int>(s.group_triangles.size()), ErrorCode::InvalidArgument,
          "particle index out of range");
  return rigid_l2_fit(v, s.group_triangles[particle], s.mesh().centers[particle], defect);
}

bool MicroSolver::admissible(const MixedField& v) const {
  const Impl& s = *impl_;
  if (v.u.size() != s.vs->num_dofs() || !v.u.allFinite()) return false;
  const double scale = v.u.lpNorm<Eigen::Infinity>();
  for (int n : s.boundary_nodes)
    if (v.node_velocity(n).norm() > 1e-12 * scale) return false;
  for (std::size_t k = 0; k < s.group_nodes.size(); ++k) {
    const RigidMotion rm = rigid_l2_fit(v, s.group_triangles[k], s.mesh().centers[k]);
    for (int n : s.group_nodes[k])
      if ((v.node_velocity(n) - rm(s.vs->node(n))).norm() > 1e-10 * scale) return false;
  }
  const Vec div = s.B_full * v.u;
  const Vec ref = s.B_full.cwiseAbs() * v.u.cwiseAbs();
  return div.norm() <= 1e-8 * ref.norm();
}

double MicroSolver::energy(const MixedField& v, const RandomCellField& field) const {
  const Impl& s = *impl_;
  if (!admissible(v)) return kInadmissible;
  double e = strain_energy(v, s.problem.mu);
  if (s.problem.body_force) e -= load_work(v, s.problem.body_force);
  if (s.has_force) e += surface_energy_micro(*s.problem.force, field, s.mesh(), s.points, v);
  return e;
}

MixedField MicroSolver::random_admissible(std::uint64_t seed) const {
  const Impl& s = *impl_;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Vec load(s.vmap.reduced_size);
  for (int i = 0; i < load.size(); ++i) load(i) = n(rng);
  const SolveResult r = s.factor().solve(load, Vec::Zero(s.pmap.reduced_size));
  MixedField f = s.velocity(s.vmap.expand(r.u));
  f.u /= s.h1(f.u);
  return f;
}

MicroSolution MicroSolver::solve(const RandomCellField& field, const MixedField* initial) const {
  const Impl& s = *impl_;
  const PicardOptions& opt = s.problem.picard;
  const double theta = s.constant_force ? 1.0 : opt.theta;
  const std::vector<double> amp = s.amplitudes(field);

  Vec u = Vec::Zero(s.vs->num_dofs());
  if (initial) {
    require(initial->u.size() == u.size(), ErrorCode::InvalidArgument, "initial guess lives on another mesh");
    u = initial->u;
  }
  Vec ur = s.vmap.reduce(u);
  u = s.vmap.expand(ur);
  Vec pr = Vec::Zero(s.pmap.reduced_size);
  MicroSolution out;
  PicardTrace& trace = out.trace;
  auto load_of = [&](const Vec& full) { return Vec(-s.vmap.restrict_adjoint(s.surface_gradient(full, amp))); };

  for (int m = 1; m <= opt.max_iterations; ++m) {
    const Vec load = load_of(u);
    const SolveResult r = s.factor().solve(s.sys.F + load, s.sys.G, &pr);
    ur += theta * (r.u - ur);
    pr += theta * (r.p - pr);
    const Vec u_new = s.vmap.expand(ur);
    trace.increments.push_back(s.h1(u_new - u));
    u = u_new;
    trace.energies.push_back(energy(s.velocity(u), field));
    trace.iterations = m;
    spdlog::debug("micro picard {}: increment {:.3e} energy {:.12e}", m, trace.increments.back(),
                  trace.energies.back());
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
  const Vec rhs = s.sys.F + load_of(u);
  const Vec res_u = s.sys.K * ur + s.sys.B.transpose() * pr - rhs;
  const Vec res_p = s.sys.B * ur - s.sys.G;
  out.weak_residual = std::sqrt(res_u.squaredNorm() + res_p.squaredNorm()) / std::max(rhs.norm(), 1e-300);
  out.div_residual = (s.B_full * u).norm();
  for (std::size_t k = 0; k < s.group_triangles.size(); ++k) {
    double d = 0.0;
    rigid_l2_fit(out.u, s.group_triangles[k], s.mesh().centers[k], &d);
    out.rigid_residual = std::max(out.rigid_residual, d);
  }
  return out;
}

std::vector<ParticleBalance> MicroSolver::balance(const MicroSolution& sol, const RandomCellField& field) const {
  const Impl& s = *impl_;
  const PerforatedMesh& mesh = s.mesh();
  require(sol.u.u.size() == s.vs->num_dofs() && sol.u.p.size() == s.ps->size(), ErrorCode::InvalidArgument,
          "solution lives on another mesh");
  SpMat K_full, B_full;
  assemble_full(*s.vs, *s.ps, s.forms, K_full, B_full);
  std::vector<char> fluid(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) fluid[t] = mesh.region[t] == Region::Fluid;
  Vec flux = K_full * sol.u.u + B_full.transpose() * sol.u.p;
  if (s.problem.body_force)
    flux -= assemble_pointwise_load(
        *s.vs, [&](int, const Eigen::Vector3d&, const Vec2& x) { return s.problem.body_force(x); }, fluid);

  std::vector<ParticleBalance> out(mesh.particles.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    ParticleBalance& b = out[k];
    const Vec2 c = mesh.centers[k];
    for (int n : s.group_nodes[k]) {
      const Vec2 r = s.vs->node(n) - c;
      const Vec2 f = flux.segment<2>(2 * n);
      b.fluid_force -= f;
      b.fluid_torque -= r.x() * f.y() - r.y() * f.x();
    }
    if (s.problem.body_force) {
      const TriangleRule& rule = triangle_rule_deg5();
      for (int t : s.group_triangles[k])
        for (int q = 0; q < rule.size(); ++q) {
          const Vec2 x = to_physical(mesh, t, rule.bary[q]);
          const Vec2 f = mesh.area(t) * rule.w[q] * s.problem.body_force(x);
          b.body_force += f;
          b.body_torque += (x - c).x() * f.y() - (x - c).y() * f.x();
        }
    }
  }
  if (s.has_force) {
    const std::vector<double> amp = s.amplitudes(field);
    const double eps = mesh.eps.to_double();
    for (const SurfacePoint& p : s.points) {
      const Vec2 f = -eps * p.ds * s.problem.force->grad_g(p.t, sol.u.velocity(p.triangle, p.bary), amp[p.particle]);
      const Vec2 r = p.x - mesh.centers[p.particle];
      out[p.particle].surface_force += f;
      out[p.particle].surface_torque += r.x() * f.y() - r.y() * f.x();
    }
  }
  return out;
}

MicroSolution solve_micro(const MicroProblem& problem, const RandomCellField& field) {
  return MicroSolver(problem).solve(field);
}

double energy_micro(const MixedField& v, const MicroProblem& problem, const RandomCellField& field) {
  return MicroSolver(problem).energy(v, field);
}

}  // namespace homsusp
