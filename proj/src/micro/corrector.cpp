#include "homsusp/error.hpp"
#include "homsusp/micro.hpp"

namespace homsusp {

namespace {

struct MacroSampler {
  const MixedField* field;
  const MacroMesh* structured = nullptr;
  std::shared_ptr<Locator> locator;

  explicit MacroSampler(const MixedField& f) : field(&f) {
    structured = dynamic_cast<const MacroMesh*>(&f.mesh());
    if (!structured) locator = std::make_shared<Locator>(f.mesh());
  }

  Location locate(const Vec2& x) const {
    const Location loc = structured ? locate_structured(*structured, x) : locator->locate(x);
    if (!loc.found())
      fail(ErrorCode::InvalidArgument,
           "point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) + ") lies outside the macro mesh");
    return loc;
  }
};

}  // namespace

FieldFn macro_field_fn(const MixedField& field) {
  MacroSampler s(field);
  return [s](int, const Eigen::Vector3d&, const Vec2& x) {
    const Location loc = s.locate(x);
    return s.field->sample(loc.triangle, loc.bary);
  };
}

Corrector::Corrector(const PerforatedMesh& mesh, std::vector<CellSolution> basis)
    : mesh_(&mesh), basis_(std::move(basis)) {
  require(basis_.size() == 2, ErrorCode::InvalidArgument, "corrector needs the two deviatoric cell solutions");
  const Mesh& cm = basis_[0].chi.mesh();
  require(&cm == &basis_[1].chi.mesh() || cm.num_triangles() == basis_[1].chi.mesh().num_triangles(),
          ErrorCode::InvalidArgument, "cell solutions live on different meshes");
  matching_ = cm.num_triangles() == mesh.cell.num_triangles() && cm.vertices == mesh.cell.vertices &&
              cm.triangles == mesh.cell.triangles;
  cell_locator_ = std::make_unique<Locator>(cm);
}

Corrector::~Corrector() = default;

FieldSample Corrector::cell_sample(int a, int t, const Eigen::Vector3d& l, const Vec2& x) const {
  const MixedField& chi = basis_[a].chi;
  if (matching_ && mesh_->source_triangle[t] >= 0) return chi.sample(mesh_->source_triangle[t], l);
  const double eps = mesh_->eps.to_double();
  Vec2 y = x / eps;
  y -= y.array().round().matrix();
  const Location loc = cell_locator_->locate(y, 1e-9);
  require(loc.found(), ErrorCode::InvalidArgument, "periodic point not found on the cell mesh");
  return chi.sample(loc.triangle, loc.bary);
}

FieldFn Corrector::of(const MixedField& ustar) const {
  const MacroSampler macro(ustar);
  const std::vector<Mat2> E = deviatoric_basis();
  const double eps = mesh_->eps.to_double();
  return [this, macro, E, eps](int t, const Eigen::Vector3d& l, const Vec2& x) {
    const Location loc = macro.locate(x);
    const Mat2 g = macro.field->gradient(loc.triangle, loc.bary);
    const Mat2 e = 0.5 * (g + g.transpose());
    const std::array<Mat2, 2> H = macro.field->hessian(loc.triangle);
    FieldSample out;
    for (int a = 0; a < 2; ++a) {
      const double c = frobenius(e, E[a]);
      // d_j (e : E_a) = sum_ik E_a(i, k) (d_j d_k u_i + d_j d_i u_k) / 2
      Vec2 dc = Vec2::Zero();
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) dc += 0.5 * E[a](i, k) * (H[i].row(k).transpose() + H[k].row(i).transpose());
      if (c == 0.0 && dc.isZero(0.0)) continue;
      const FieldSample chi = cell_sample(a, t, l, x);
      out.value += eps * c * chi.value;
      out.grad += c * chi.grad + eps * chi.value * dc.transpose();
    }
    return out;
  };
}

FieldFn Corrector::corrected(const MixedField& ustar) const {
  return difference(macro_field_fn(ustar), of(ustar));
}

GapNorms gap_norms(const MixedField& micro, const MixedField& ustar, const Corrector& corrector) {
  const FieldFn um = field_fn(micro);
  const FieldFn diff = difference(um, macro_field_fn(ustar));
  const NormSet plain = norms(micro.mesh(), diff);
  const NormSet corr = norms(micro.mesh(), difference(um, corrector.corrected(ustar)));
  return {plain.l2, plain.h1(), corr.h1()};
}

}  // namespace homsusp
