#include <Eigen/Eigenvalues>

#include "homsusp/cell.hpp"
#include "homsusp/error.hpp"

namespace homsusp {

void require_deviatoric(const Mat2& A) {
  require(A.allFinite(), ErrorCode::InvalidArgument, "loading must be finite");
  require(is_symmetric(A, 1e-12), ErrorCode::InvalidArgument, "loading must be symmetric");
  if (std::abs(A.trace()) > 1e-12 * (1.0 + A.norm()))
    fail(ErrorCode::NonTraceFreeStrain, "cell loading must be trace free (trace " +
                                            std::to_string(A.trace()) + ")");
}

struct CellSolver::Impl {
  std::shared_ptr<const CellMesh> mesh;
  double mu = 1.0;
  std::shared_ptr<const P2Space> vs;
  std::shared_ptr<const PressureSpace> ps;
  ConstraintMap vmap;
  PressureMap pmap;
  StokesForms forms;
  std::unique_ptr<SaddleSolver> solver;
  SpMat K_full;
  SpMat B_full;
  std::vector<int> rigid_nodes;
  double rigid_area = 0.0;

  double integrate(const std::function<double(int, const Eigen::Vector3d&)>& f) const {
    const TriangleRule& rule = triangle_rule_deg5();
    double sum = 0.0;
    for (int t = 0; t < mesh->num_triangles(); ++t) {
      double s = 0.0;
      for (int q = 0; q < rule.size(); ++q) s += rule.w[q] * f(t, rule.bary[q]);
      sum += mesh->area(t) * s;
    }
    return sum;
  }

  MixedField wrap(const Vec& u) const {
    MixedField f = make_field(vs, nullptr);
    f.u = u;
    return f;
  }
};

CellSolver::CellSolver(std::shared_ptr<const CellMesh> mesh, double mu, const SolverOptions& options)
    : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  require(mesh != nullptr, ErrorCode::InvalidArgument, "cell solver needs a mesh");
  s.mesh = std::move(mesh);
  s.mu = mu;
  s.forms.viscosity = Viscosity::scalar(mu);
  s.forms.viscosity.validate();
  const std::shared_ptr<const Mesh> base = s.mesh;
  s.vs = std::make_shared<const P2Space>(base);
  s.ps = std::make_shared<const PressureSpace>(PressureSpace::fluid_p1(base));

  VelocityConstraintSpec spec;
  spec.periodic = true;
  const std::vector<char> rigid = s.vs->region_nodes(Region::Rigid);
  for (int n = 0; n < s.vs->num_nodes(); ++n)
    if (rigid[n]) s.rigid_nodes.push_back(n);
  if (!s.rigid_nodes.empty()) {
    RigidGroup g;
    g.nodes = s.rigid_nodes;
    g.pin_translation = true;
    spec.rigid = {g};
  } else {
    int best = 0;
    for (int v = 1; v < s.mesh->num_vertices(); ++v)
      if (s.mesh->vertices[v].norm() < s.mesh->vertices[best].norm()) best = v;
    spec.pinned_nodes = {best};
  }
  s.vmap = build_velocity_constraints(*s.vs, spec);
  s.pmap = build_pressure_map(*s.ps, true, true);
  s.rigid_area = s.mesh->measure(Region::Rigid);

  const SaddleSystem sys = assemble_stokes(*s.vs, *s.ps, s.vmap, s.pmap, s.forms);
  s.solver = std::make_unique<SaddleSolver>(sys, options);
  assemble_full(*s.vs, *s.ps, s.forms, s.K_full, s.B_full);
}

CellSolver::~CellSolver() = default;

const CellMesh& CellSolver::mesh() const { return *impl_->mesh; }
const std::shared_ptr<const P2Space>& CellSolver::velocity_space() const { return impl_->vs; }
double CellSolver::mu() const { return impl_->mu; }
int CellSolver::reduced_size() const { return impl_->vmap.reduced_size; }

CellSolution CellSolver::solve(const Mat2& A) const {
  const Impl& s = *impl_;
  require_deviatoric(A);
  CellSolution out;
  out.A = 0.5 * (A + A.transpose());
  ConstraintMap map = s.vmap;
  if (!s.rigid_nodes.empty()) map.set_rigid_strains(s.vs->nodes(), {out.A});
  Vec F, G;
  assemble_rhs(*s.vs, *s.ps, map, s.pmap, s.forms, F, G);
  const SolveResult res = s.solver->solve(F, G);
  out.chi = make_field(s.vs, s.ps);
  out.chi.u = map.expand(res.u);
  out.chi.p = s.pmap.expand(res.p);
  out.chi.residual = res.residual;
  out.chi.flags = kPeriodic | kRigidStrain;
  normalize_velocity(out.chi);
  normalize_pressure(out.chi);
  out.dissipation = strain_energy(out.chi, s.mu);
  return out;
}

Vec CellSolver::k0_field(const Vec& reduced_load) const {
  const Impl& s = *impl_;
  require(reduced_load.size() == s.vmap.reduced_size, ErrorCode::InvalidArgument, "load size mismatch");
  const SolveResult res = s.solver->solve(reduced_load, Vec::Zero(s.pmap.reduced_size));
  return s.vmap.expand(res.u);
}

double CellSolver::flux_form(const CellSolution& a, const Mat2& B) const {
  const Impl& s = *impl_;
  require_deviatoric(B);
  if (s.rigid_nodes.empty()) return 0.0;
  Vec psi = Vec::Zero(s.vs->num_dofs());
  for (int n : s.rigid_nodes) psi.segment<2>(2 * n) = B * s.vs->node(n);
  const double bulk = a.chi.u.dot(s.K_full * psi) + a.chi.p.dot(s.B_full * psi);
  return s.mu * s.rigid_area * frobenius(a.A, B) + 0.5 * bulk;
}

double CellSolver::variational_residual(const CellSolution& a, const Vec& phi) const {
  const Impl& s = *impl_;
  const MixedField f = s.wrap(phi);
  return s.integrate([&](int t, const Eigen::Vector3d& l) {
    const Mat2 gc = a.chi.gradient(t, l), gp = f.gradient(t, l);
    const Mat2 ec = 0.5 * (gc + gc.transpose()), ep = 0.5 * (gp + gp.transpose());
    const Mat2 load = s.mesh->region[t] == Region::Rigid ? a.A : Mat2::Zero();
    return 2.0 * s.mu * frobenius(load - ec, ep);
  });
}

double CellSolver::cell_energy(const Mat2& A, const Vec& v) const {
  const Impl& s = *impl_;
  const MixedField f = s.wrap(v);
  return s.integrate([&](int t, const Eigen::Vector3d& l) {
    const Mat2 g = f.gradient(t, l);
    const Mat2 d = (s.mesh->region[t] == Region::Rigid ? A : Mat2::Zero()) - 0.5 * (g + g.transpose());
    return s.mu * d.squaredNorm();
  });
}

CellDiagnostics CellSolver::diagnose(const CellSolution& a) const {
  const Impl& s = *impl_;
  CellDiagnostics d;
  d.rigid_defect = std::sqrt(s.integrate([&](int t, const Eigen::Vector3d& l) {
    if (s.mesh->region[t] != Region::Rigid) return 0.0;
    const Mat2 g = a.chi.gradient(t, l);
    return (0.5 * (g + g.transpose()) - a.A).squaredNorm();
  }));
  d.discrete_div = (s.B_full * a.chi.u).norm();
  d.velocity_mean = velocity_mean(a.chi).norm();
  d.pressure_mean = std::abs(pressure_mean(a.chi));
  return d;
}

CellSolution solve_cell(const CellMesh& mesh, const Mat2& A, double mu, const SolverOptions& options) {
  require_deviatoric(A);
  const CellSolver solver(std::make_shared<const CellMesh>(mesh), mu, options);
  return solver.solve(A);
}

std::vector<CellSolution> corrector_basis(const CellSolver& solver) {
  std::vector<CellSolution> out;
  for (const Mat2& e : deviatoric_basis()) out.push_back(solver.solve(e));
  return out;
}

EffectiveResult effective_tensor(const CellSolver& solver) {
  EffectiveResult r;
  EffectiveTensor& T = r.tensor;
  T.mu = solver.mu();
  T.basis = deviatoric_basis();
  r.correctors = corrector_basis(solver);
  const int n = static_cast<int>(T.basis.size());
  const Mesh& mesh = solver.mesh();
  const TriangleRule& rule = triangle_rule_deg5();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      T.C_raw(i, j) = solver.flux_form(r.correctors[i], T.basis[j]);
      double e = 0.0;
      for (int t = 0; t < mesh.num_triangles(); ++t)
        for (int q = 0; q < rule.size(); ++q) {
          const Mat2 gi = r.correctors[i].chi.gradient(t, rule.bary[q]);
          const Mat2 gj = r.correctors[j].chi.gradient(t, rule.bary[q]);
          e += mesh.area(t) * rule.w[q] * frobenius(0.5 * (gi + gi.transpose()), 0.5 * (gj + gj.transpose()));
        }
      T.C_energy(i, j) = T.mu * e;
    }
  T.C = 0.5 * (T.C_raw + T.C_raw.transpose());
  T.mu_star = T.mu * Eigen::Matrix2d::Identity() + T.C;
  T.symmetry_defect = std::abs(T.C_raw(0, 1) - T.C_raw(1, 0));
  T.symmetric = T.symmetry_defect <= 1e-8 * T.C_raw.norm();
  T.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(T.C).eigenvalues().minCoeff();
  T.positive_semidefinite = T.min_eigenvalue >= -1e-10 * std::abs(T.C.trace());
  return r;
}

EffectiveResult effective_tensor(const CellMesh& mesh, double mu, const SolverOptions& options) {
  const CellSolver solver(std::make_shared<const CellMesh>(mesh), mu, options);
  return effective_tensor(solver);
}

EffectiveTensor EffectiveTensor::fluid(double mu) {
  EffectiveTensor T;
  T.mu = mu;
  T.basis = deviatoric_basis();
  T.C_raw.setZero();
  T.C.setZero();
  T.C_energy.setZero();
  T.mu_star = mu * Eigen::Matrix2d::Identity();
  T.symmetric = true;
  T.positive_semidefinite = true;
  return T;
}

double EffectiveTensor::form(const Mat2& A, const Mat2& B) const {
  require_deviatoric(A);
  require_deviatoric(B);
  return deviatoric_coordinates(A).dot(C * deviatoric_coordinates(B));
}

Mat2 EffectiveTensor::apply(const Mat2& A) const {
  require_deviatoric(A);
  const Eigen::Vector2d c = mu_star * deviatoric_coordinates(A);
  Mat2 out = Mat2::Zero();
  for (int i = 0; i < static_cast<int>(basis.size()); ++i) out += c(i) * basis[i];
  return out;
}

Eigen::Matrix3d EffectiveTensor::mandel_tensor() const {
  const Eigen::Matrix<double, 2, 3> p = mandel_to_deviatoric();
  return mu * Eigen::Matrix3d::Identity() + p.transpose() * C * p;
}

Vec reconstruct(const std::vector<CellSolution>& basis, const Mat2& A) {
  require(basis.size() == 2, ErrorCode::InvalidArgument, "expected the two deviatoric correctors");
  require_deviatoric(A);
  const Eigen::Vector2d c = deviatoric_coordinates(A);
  return c(0) * basis[0].chi.u + c(1) * basis[1].chi.u;
}

}  // namespace homsusp
