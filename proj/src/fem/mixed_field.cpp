#include <sstream>

#include <fmt/format.h>

#include "homsusp/error.hpp"
#include "homsusp/fem.hpp"
#include "homsusp/io.hpp"

namespace homsusp {

namespace {

Eigen::Matrix<double, 6, 2> local_values(const MixedField& f, int t) {
  const auto& el = f.vspace->element(t);
  Eigen::Matrix<double, 6, 2> v;
  for (int a = 0; a < 6; ++a) {
    v(a, 0) = f.u(2 * el[a]);
    v(a, 1) = f.u(2 * el[a] + 1);
  }
  return v;
}

}  // namespace

Vec2 MixedField::velocity(int t, const Eigen::Vector3d& l) const {
  const auto n = p2_values(l);
  const auto& el = vspace->element(t);
  Vec2 v = Vec2::Zero();
  for (int a = 0; a < 6; ++a) v += n[a] * Vec2(u(2 * el[a]), u(2 * el[a] + 1));
  return v;
}

Mat2 MixedField::gradient(int t, const Eigen::Vector3d& l) const {
  const P2Grad dn = p2_gradients(l, barycentric_gradients(mesh(), t));
  // grad(i, j) = d_j u_i
  return local_values(*this, t).transpose() * dn;
}

FieldSample MixedField::sample(int t, const Eigen::Vector3d& l) const {
  return {velocity(t, l), gradient(t, l)};
}

std::array<Mat2, 2> MixedField::hessian(int t) const {
  const BaryGrad g = barycentric_gradients(mesh(), t);
  // Second derivatives of the P2 basis are constant: d_i d_j of each shape function.
  std::array<Mat2, 6> h;
  for (int i = 0; i < 3; ++i) h[i] = 4.0 * g.row(i).transpose() * g.row(i);
  auto sym = [&](int a, int b) {
    return Mat2(4.0 * (g.row(a).transpose() * g.row(b) + g.row(b).transpose() * g.row(a)));
  };
  h[3] = sym(0, 1);
  h[4] = sym(1, 2);
  h[5] = sym(2, 0);
  const auto v = local_values(*this, t);
  std::array<Mat2, 2> out{Mat2::Zero(), Mat2::Zero()};
  for (int a = 0; a < 6; ++a)
    for (int c = 0; c < 2; ++c) out[c] += v(a, c) * h[a];
  return out;
}

double MixedField::pressure(int t, const Eigen::Vector3d& l) const {
  if (!pspace || p.size() == 0) return 0.0;
  return pspace->evaluate(p, t, l);
}

MixedField make_field(std::shared_ptr<const P2Space> vspace, std::shared_ptr<const PressureSpace> pspace) {
  MixedField f;
  f.u = Vec::Zero(vspace->num_dofs());
  if (pspace) f.p = Vec::Zero(pspace->size());
  f.vspace = std::move(vspace);
  f.pspace = std::move(pspace);
  return f;
}

MixedField solve_stokes(std::shared_ptr<const P2Space> vspace, std::shared_ptr<const PressureSpace> pspace,
                        const ConstraintMap& vmap, const PressureMap& pmap, const StokesForms& forms,
                        const SolverOptions& options, unsigned flags) {
  const SaddleSystem sys = assemble_stokes(*vspace, *pspace, vmap, pmap, forms);
  const SaddleSolver solver(sys, options);
  const SolveResult res = solver.solve(sys.F, sys.G);
  MixedField f = make_field(std::move(vspace), std::move(pspace));
  f.u = vmap.expand(res.u);
  f.p = pmap.expand(res.p);
  f.flags = flags;
  f.residual = res.residual;
  return f;
}

Vec interpolate(const P2Space& space, const VectorFn& f) {
  Vec u(space.num_dofs());
  for (int n = 0; n < space.num_nodes(); ++n) {
    const Vec2 v = f(space.node(n));
    u(2 * n) = v.x();
    u(2 * n + 1) = v.y();
  }
  return u;
}

double pressure_mean(const MixedField& field) {
  if (!field.pspace || field.p.size() == 0) return 0.0;
  const Mesh& mesh = field.mesh();
  double integral = 0.0, measure = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!field.pspace->supported(t)) continue;
    const double a = mesh.area(t);
    integral += a * field.pspace->evaluate(field.p, t, Eigen::Vector3d::Constant(1.0 / 3.0));
    measure += a;
  }
  return measure > 0.0 ? integral / measure : 0.0;
}

double normalize_pressure(MixedField& field) {
  const double mean = pressure_mean(field);
  field.p.array() -= mean;
  field.flags |= kZeroMeanPressure;
  return mean;
}

Vec2 velocity_mean(const MixedField& field) {
  const Mesh& mesh = field.mesh();
  const TriangleRule& rule = triangle_rule_deg5();
  Vec2 integral = Vec2::Zero();
  double measure = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.area(t);
    for (int q = 0; q < rule.size(); ++q) integral += a * rule.w[q] * field.velocity(t, rule.bary[q]);
    measure += a;
  }
  return integral / measure;
}

Vec2 normalize_velocity(MixedField& field) {
  const Vec2 mean = velocity_mean(field);
  for (int n = 0; n < field.vspace->num_nodes(); ++n) {
    field.u(2 * n) -= mean.x();
    field.u(2 * n + 1) -= mean.y();
  }
  field.flags |= kZeroMeanVelocity;
  return mean;
}

FieldFn field_fn(const MixedField& field) {
  return [&field](int t, const Eigen::Vector3d& l, const Vec2&) { return field.sample(t, l); };
}

FieldFn difference(FieldFn a, FieldFn b) {
  return [a = std::move(a), b = std::move(b)](int t, const Eigen::Vector3d& l, const Vec2& x) {
    const FieldSample sa = a(t, l, x), sb = b(t, l, x);
    return FieldSample{sa.value - sb.value, sa.grad - sb.grad};
  };
}

NormSet norms(const Mesh& mesh, const FieldFn& f, const std::vector<char>& mask,
              const TriangleRule& rule) {
  double l2 = 0.0, h1 = 0.0, dv = 0.0, st = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!mask.empty() && !mask[t]) continue;
    const double a = mesh.area(t);
    for (int q = 0; q < rule.size(); ++q) {
      const Vec2 x = to_physical(mesh, t, rule.bary[q]);
      const FieldSample s = f(t, rule.bary[q], x);
      const double w = a * rule.w[q];
      const Mat2 e = 0.5 * (s.grad + s.grad.transpose());
      l2 += w * s.value.squaredNorm();
      h1 += w * s.grad.squaredNorm();
      dv += w * s.grad.trace() * s.grad.trace();
      st += w * e.squaredNorm();
    }
  }
  return {std::sqrt(l2), std::sqrt(h1), std::sqrt(dv), std::sqrt(st)};
}

double strain_energy(const MixedField& field, double mu, const std::vector<char>& mask) {
  const Mesh& mesh = field.mesh();
  const TriangleRule& rule = triangle_rule_deg5();
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!mask.empty() && !mask[t]) continue;
    const double a = mesh.area(t);
    for (int q = 0; q < rule.size(); ++q) {
      const Mat2 g = field.gradient(t, rule.bary[q]);
      const Mat2 e = 0.5 * (g + g.transpose());
      sum += a * rule.w[q] * mu * e.squaredNorm();
    }
  }
  return sum;
}

double tensor_energy(const MixedField& field, const Eigen::Matrix3d& w) {
  const Mesh& mesh = field.mesh();
  const TriangleRule& rule = triangle_rule_deg5();
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.area(t);
    for (int q = 0; q < rule.size(); ++q) {
      const Mat2 g = field.gradient(t, rule.bary[q]);
      const Mandel e = to_mandel(0.5 * (g + g.transpose()));
      sum += a * rule.w[q] * e.dot(w * e);
    }
  }
  return sum;
}

double load_work(const MixedField& field, const VectorFn& f) {
  const Mesh& mesh = field.mesh();
  const TriangleRule& rule = triangle_rule_deg5();
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double a = mesh.area(t);
    for (int q = 0; q < rule.size(); ++q)
      sum += a * rule.w[q] *
             f(to_physical(mesh, t, rule.bary[q])).dot(field.velocity(t, rule.bary[q]));
  }
  return sum;
}

Vec assemble_pointwise_load(const P2Space& space,
                            const std::function<Vec2(int, const Eigen::Vector3d&, const Vec2&)>& f,
                            const std::vector<char>& mask) {
  const Mesh& mesh = space.mesh();
  const TriangleRule& rule = triangle_rule_deg5();
  Vec out = Vec::Zero(space.num_dofs());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!mask.empty() && !mask[t]) continue;
    const double a = mesh.area(t);
    const auto& el = space.element(t);
    for (int q = 0; q < rule.size(); ++q) {
      const Vec2 v = a * rule.w[q] * f(t, rule.bary[q], to_physical(mesh, t, rule.bary[q]));
      const auto n = p2_values(rule.bary[q]);
      for (int k = 0; k < 6; ++k) {
        out(2 * el[k]) += n[k] * v.x();
        out(2 * el[k] + 1) += n[k] * v.y();
      }
    }
  }
  return out;
}

void write_field_vtk(const MixedField& field, const std::string& path, const std::string& name) {
  const Mesh& mesh = field.mesh();
  std::ostringstream out;
  out << "# vtk DataFile Version 3.0\nhomsusp field\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices) out << fmt::format("{:.17g} {:.17g} 0\n", v.x(), v.y());
  out << "CELLS " << mesh.num_triangles() << " " << 4 * mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << mesh.num_triangles() << "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t) out << "5\n";
  out << "CELL_DATA " << mesh.num_triangles() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (Region r : mesh.region) out << (r == Region::Rigid ? 1 : 0) << "\n";
  out << "POINT_DATA " << mesh.num_vertices() << "\nVECTORS " << name << " double\n";
  for (int v = 0; v < mesh.num_vertices(); ++v)
    out << fmt::format("{:.17g} {:.17g} 0\n", field.u(2 * v), field.u(2 * v + 1));
  if (field.pspace && field.p.size() > 0) {
    std::vector<double> pv(mesh.num_vertices(), 0.0);
    for (int v = 0; v < mesh.num_vertices(); ++v)
      if (field.pspace->vertex_dof[v] >= 0) pv[v] = field.p(field.pspace->vertex_dof[v]);
    out << "SCALARS p double 1\nLOOKUP_TABLE default\n";
    for (double x : pv) out << fmt::format("{:.17g}\n", x);
  }
  write_text_atomic(path, out.str());
}

}  // namespace homsusp
