#include <Eigen/Eigenvalues>

#include "homsusp/error.hpp"
#include "homsusp/fem.hpp"

namespace homsusp {

Viscosity Viscosity::scalar(double mu) {
  Viscosity v;
  v.mu = mu;
  return v;
}

Viscosity Viscosity::tensor(const Eigen::Matrix3d& w) {
  Viscosity v;
  v.mandel = w;
  return v;
}

void Viscosity::validate() const {
  if (mandel) {
    const Eigen::Matrix3d& w = *mandel;
    require(w.allFinite() && (w - w.transpose()).norm() <= 1e-12 * (1.0 + w.norm()),
            ErrorCode::SingularViscosity, "viscosity tensor must be finite and symmetric");
    const Eigen::Matrix<double, 2, 3> p = mandel_to_deviatoric();
    const Eigen::Matrix2d dev = p * w * p.transpose();
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(dev).eigenvalues().minCoeff();
    require(lmin > 0.0, ErrorCode::SingularViscosity,
            "viscosity tensor is not positive definite on trace-free matrices");
    return;
  }
  if (!field)
    require(std::isfinite(mu) && mu > 0.0, ErrorCode::SingularViscosity, "viscosity must be positive");
}

Eigen::Matrix3d Viscosity::at(const Vec2& x) const {
  if (mandel) return *mandel;
  const double m = field ? field(x) : mu;
  if (!(m > 0.0)) fail(ErrorCode::SingularViscosity, "non-positive viscosity at a quadrature point");
  return m * Eigen::Matrix3d::Identity();
}

namespace {

using Triplet = Eigen::Triplet<double, int>;

// Sums triplets into a sparse matrix in bounded-size chunks.
class Accumulator {
 public:
  Accumulator(int rows, int cols) : sum_(rows, cols) {}
  void add(int r, int c, double v) {
    if (v == 0.0) return;
    buf_.emplace_back(r, c, v);
    if (buf_.size() >= kChunk) flush();
  }
  SpMat finish() {
    flush();
    sum_.makeCompressed();
    return std::move(sum_);
  }

 private:
  static constexpr std::size_t kChunk = 1u << 23;
  void flush() {
    if (buf_.empty()) return;
    SpMat part(sum_.rows(), sum_.cols());
    part.setFromTriplets(buf_.begin(), buf_.end());
    if (sum_.nonZeros() == 0) sum_ = std::move(part);
    else sum_ += part;
    buf_.clear();
  }
  SpMat sum_;
  std::vector<Triplet> buf_;
};

struct Element {
  Eigen::Matrix<double, 12, 12> K;
  Eigen::Matrix<double, 3, 12> B;
  Eigen::Matrix3d Mp;
  Eigen::Matrix<double, 12, 1> F;
  std::array<int, 3> pdof{};
  int np = 0;
  bool has_k = false;
};

void compute_element(const P2Space& vs, const PressureSpace& ps, const StokesForms& forms,
                     const std::vector<char>& kmask, int t, bool want_k, bool want_b, bool want_f,
                     Element& el) {
  const Mesh& mesh = vs.mesh();
  const TriangleRule& rule = triangle_rule_deg5();
  const BaryGrad g = barycentric_gradients(mesh, t);
  const double area = mesh.area(t);
  el.K.setZero();
  el.B.setZero();
  el.Mp.setZero();
  el.F.setZero();
  el.has_k = want_k && kmask[t];
  el.np = 0;
  const bool p1 = want_b && ps.p1_triangle[t];
  const bool grp = want_b && !p1 && ps.group_dof[t] >= 0;
  if (p1) {
    el.np = 3;
    for (int k = 0; k < 3; ++k) el.pdof[k] = ps.vertex_dof[mesh.triangles[t][k]];
  } else if (grp) {
    el.np = 1;
    el.pdof[0] = ps.group_dof[t];
  }
  for (int q = 0; q < rule.size(); ++q) {
    const Eigen::Vector3d& l = rule.bary[q];
    const double w = rule.w[q] * area;
    const P2Grad dn = p2_gradients(l, g);
    if (el.has_k) {
      if (forms.form == StrainForm::Symmetric) {
        const Eigen::Matrix3d W = forms.viscosity.at(to_physical(mesh, t, l));
        Eigen::Matrix<double, 3, 12> bm;
        for (int a = 0; a < 6; ++a)
          for (int c = 0; c < 2; ++c) bm.col(2 * a + c) = mandel_strain(dn(a, 0), dn(a, 1), c);
        el.K.noalias() += (2.0 * w) * bm.transpose() * W * bm;
      } else {
        const double mu = forms.viscosity.at(to_physical(mesh, t, l))(0, 0);
        const Eigen::Matrix<double, 6, 6> gg = dn * dn.transpose();
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b) {
            el.K(2 * a, 2 * b) += w * mu * gg(a, b);
            el.K(2 * a + 1, 2 * b + 1) += w * mu * gg(a, b);
          }
      }
    }
    if (el.np > 0) {
      const Eigen::Vector3d psi = p1 ? l : Eigen::Vector3d(1.0, 0.0, 0.0);
      for (int k = 0; k < el.np; ++k) {
        for (int a = 0; a < 6; ++a)
          for (int c = 0; c < 2; ++c) el.B(k, 2 * a + c) -= w * psi(k) * dn(a, c);
        for (int r = 0; r < el.np; ++r) el.Mp(k, r) += w * psi(k) * psi(r);
      }
    }
    if (want_f && forms.body_force) {
      const Vec2 f = forms.body_force(to_physical(mesh, t, l));
      const auto n = p2_values(l);
      for (int a = 0; a < 6; ++a) {
        el.F(2 * a) += w * n[a] * f.x();
        el.F(2 * a + 1) += w * n[a] * f.y();
      }
    }
  }
}

std::vector<char> default_mask(const Mesh& mesh, const StokesForms& forms) {
  if (!forms.stiffness_mask.empty()) {
    require(static_cast<int>(forms.stiffness_mask.size()) == mesh.num_triangles(),
            ErrorCode::InvalidArgument, "stiffness mask size mismatch");
    return forms.stiffness_mask;
  }
  std::vector<char> mask(mesh.triangles.size());
  for (int t = 0; t < mesh.num_triangles(); ++t) mask[t] = mesh.region[t] == Region::Fluid;
  return mask;
}

void run_assembly(const P2Space& vs, const PressureSpace& ps, const ConstraintMap& vmap,
                  const PressureMap& pmap, const StokesForms& forms, bool matrices,
                  SaddleSystem& out) {
  forms.viscosity.validate();
  require(vmap.full_size == vs.num_dofs(), ErrorCode::InvalidArgument, "constraint map size mismatch");
  const Mesh& mesh = vs.mesh();
  const std::vector<char> kmask = default_mask(mesh, forms);
  const int nu = vmap.reduced_size, np = pmap.reduced_size;
  Accumulator kacc(matrices ? nu : 0, matrices ? nu : 0);
  Accumulator bacc(matrices ? np : 0, matrices ? nu : 0);
  Accumulator macc(matrices && forms.pressure_mass ? np : 0, matrices && forms.pressure_mass ? np : 0);
  out.F = Vec::Zero(nu);
  out.G = Vec::Zero(np);

  Element el;
  std::array<double, 12> off{};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& nodes = vs.element(t);
    bool any_offset = false;
    for (int a = 0; a < 6; ++a)
      for (int c = 0; c < 2; ++c) {
        off[2 * a + c] = vmap.offset(2 * nodes[a] + c);
        any_offset = any_offset || off[2 * a + c] != 0.0;
      }
    const bool need_k = kmask[t] && (matrices || any_offset);
    const bool need_b = ps.supported(t) && (matrices || any_offset);
    const bool need_f = static_cast<bool>(forms.body_force);
    if (!need_k && !need_b && !need_f) continue;
    compute_element(vs, ps, forms, kmask, t, need_k, need_b, need_f, el);

    for (int i = 0; i < 12; ++i) {
      const int gi = 2 * nodes[i / 2] + i % 2;
      double fi = el.F(i);
      if (el.has_k && any_offset)
        for (int j = 0; j < 12; ++j) fi -= el.K(i, j) * off[j];
      for (int k = vmap.ptr[gi]; k < vmap.ptr[gi + 1]; ++k) {
        out.F(vmap.col[k]) += vmap.coef[k] * fi;
        if (!matrices || !el.has_k) continue;
        for (int j = 0; j < 12; ++j) {
          const int gj = 2 * nodes[j / 2] + j % 2;
          const double kij = vmap.coef[k] * el.K(i, j);
          if (kij == 0.0) continue;
          for (int l = vmap.ptr[gj]; l < vmap.ptr[gj + 1]; ++l)
            kacc.add(vmap.col[k], vmap.col[l], kij * vmap.coef[l]);
        }
      }
    }
    for (int q = 0; q < el.np; ++q) {
      const int rq = pmap.reduced_of_full[el.pdof[q]];
      if (rq < 0) continue;
      double gq = 0.0;
      for (int j = 0; j < 12; ++j) gq -= el.B(q, j) * off[j];
      out.G(rq) += gq;
      if (!matrices) continue;
      for (int j = 0; j < 12; ++j) {
        const int gj = 2 * nodes[j / 2] + j % 2;
        for (int l = vmap.ptr[gj]; l < vmap.ptr[gj + 1]; ++l)
          bacc.add(rq, vmap.col[l], el.B(q, j) * vmap.coef[l]);
      }
      if (forms.pressure_mass)
        for (int r = 0; r < el.np; ++r) {
          const int rr = pmap.reduced_of_full[el.pdof[r]];
          if (rr >= 0) macc.add(rq, rr, el.Mp(q, r));
        }
    }
  }
  if (matrices) {
    out.K = kacc.finish();
    out.B = bacc.finish();
    if (forms.pressure_mass) out.Mp = macc.finish();
  }
}

ConstraintMap identity_map(int n) {
  ConstraintMap m;
  m.full_size = m.reduced_size = n;
  m.ptr.resize(n + 1);
  m.col.resize(n);
  m.coef.assign(n, 1.0);
  for (int i = 0; i <= n; ++i) m.ptr[i] = i;
  for (int i = 0; i < n; ++i) m.col[i] = i;
  m.offset = Vec::Zero(n);
  return m;
}

}  // namespace

SaddleSystem assemble_stokes(const P2Space& vspace, const PressureSpace& pspace,
                             const ConstraintMap& vmap, const PressureMap& pmap,
                             const StokesForms& forms) {
  SaddleSystem sys;
  run_assembly(vspace, pspace, vmap, pmap, forms, true, sys);
  return sys;
}

void assemble_rhs(const P2Space& vspace, const PressureSpace& pspace, const ConstraintMap& vmap,
                  const PressureMap& pmap, const StokesForms& forms, Vec& F, Vec& G) {
  SaddleSystem sys;
  run_assembly(vspace, pspace, vmap, pmap, forms, false, sys);
  F = std::move(sys.F);
  G = std::move(sys.G);
}

void assemble_full(const P2Space& vspace, const PressureSpace& pspace, const StokesForms& forms,
                   SpMat& K, SpMat& B) {
  const ConstraintMap vmap = identity_map(vspace.num_dofs());
  PressureMap pmap;
  pmap.reduced_size = pspace.size();
  pmap.reduced_of_full.resize(pspace.size());
  for (int i = 0; i < pspace.size(); ++i) pmap.reduced_of_full[i] = i;
  StokesForms f = forms;
  f.body_force = nullptr;
  SaddleSystem sys;
  run_assembly(vspace, pspace, vmap, pmap, f, true, sys);
  K = std::move(sys.K);
  B = std::move(sys.B);
}

Vec assemble_load(const P2Space& vspace, const ConstraintMap& vmap, const VectorFn& f,
                  const std::vector<char>& mask) {
  const Mesh& mesh = vspace.mesh();
  const TriangleRule& rule = triangle_rule_deg5();
  Vec out = Vec::Zero(vmap.reduced_size);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (!mask.empty() && !mask[t]) continue;
    const double area = mesh.area(t);
    const auto& nodes = vspace.element(t);
    Eigen::Matrix<double, 12, 1> fe = Eigen::Matrix<double, 12, 1>::Zero();
    for (int q = 0; q < rule.size(); ++q) {
      const Vec2 fx = f(to_physical(mesh, t, rule.bary[q]));
      const auto n = p2_values(rule.bary[q]);
      for (int a = 0; a < 6; ++a) {
        fe(2 * a) += rule.w[q] * area * n[a] * fx.x();
        fe(2 * a + 1) += rule.w[q] * area * n[a] * fx.y();
      }
    }
    for (int i = 0; i < 12; ++i) {
      const int gi = 2 * nodes[i / 2] + i % 2;
      for (int k = vmap.ptr[gi]; k < vmap.ptr[gi + 1]; ++k) out(vmap.col[k]) += vmap.coef[k] * fe(i);
    }
  }
  return out;
}

}  // namespace homsusp
