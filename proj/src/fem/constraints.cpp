#include <Eigen/SparseCholesky>
#include <limits>

#include "homsusp/error.hpp"
#include "homsusp/fem.hpp"

namespace homsusp {

namespace {

enum class NodeKind : std::uint8_t { Free, Slave, Fixed, Rigid };

void check_trace(const Mat2& a) {
  if (std::abs(a.trace()) > 1e-12 * (1.0 + a.norm()))
    fail(ErrorCode::NonTraceFreeStrain,
         "prescribed strain has trace " + std::to_string(a.trace()) +
             "; a periodic cell only admits trace-free strains");
}

}  // namespace

ConstraintMap build_velocity_constraints(const P2Space& space, const VelocityConstraintSpec& spec) {
  const int nn = space.num_nodes();
  std::vector<NodeKind> kind(nn, NodeKind::Free);
  std::vector<int> link(nn, -1);  // master node, or rigid group
  std::vector<Vec2> fixed(nn, Vec2::Zero());

  for (int g = 0; g < static_cast<int>(spec.rigid.size()); ++g)
    for (int n : spec.rigid[g].nodes) {
      require(n >= 0 && n < nn, ErrorCode::InvalidArgument, "rigid node out of range");
      kind[n] = NodeKind::Rigid;
      link[n] = g;
    }

  if (spec.periodic)
    for (const auto& g : spec.rigid) check_trace(g.strain);

  if (spec.dirichlet_box) {
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::max());
    Vec2 hi = -lo;
    for (const auto& x : space.nodes()) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
    const double tol = 1e-12 * (1.0 + (hi - lo).norm());
    for (int n = 0; n < nn; ++n) {
      const Vec2& x = space.node(n);
      const bool boundary = std::abs(x.x() - lo.x()) <= tol || std::abs(x.x() - hi.x()) <= tol ||
                            std::abs(x.y() - lo.y()) <= tol || std::abs(x.y() - hi.y()) <= tol;
      if (!boundary) continue;
      require(kind[n] != NodeKind::Rigid, ErrorCode::InvalidArgument,
              "rigid region touches the Dirichlet boundary");
      kind[n] = NodeKind::Fixed;
      fixed[n] = spec.boundary_value ? spec.boundary_value(x) : Vec2::Zero();
    }
  }
  for (int n : spec.pinned_nodes) {
    require(n >= 0 && n < nn, ErrorCode::InvalidArgument, "pinned node out of range");
    kind[n] = NodeKind::Fixed;
    fixed[n] = Vec2::Zero();
  }
  if (spec.periodic) {
    const PeriodicPairing pairing = periodic_pairing(space.nodes(), spec.periodic_tol);
    for (int n = 0; n < nn; ++n) {
      if (pairing.master[n] == n) continue;
      require(kind[n] == NodeKind::Free && kind[pairing.master[n]] == NodeKind::Free,
              ErrorCode::InvalidArgument, "periodic node carries another constraint");
      kind[n] = NodeKind::Slave;
      link[n] = pairing.master[n];
    }
  }

  ConstraintMap map;
  map.full_size = 2 * nn;
  std::vector<int> first(nn, -1);
  int next = 0;
  for (int n = 0; n < nn; ++n)
    if (kind[n] == NodeKind::Free) {
      first[n] = next;
      next += 2;
    }
  map.rigid = spec.rigid;
  map.periodic = spec.periodic;
  map.rigid_dofs.resize(spec.rigid.size());
  for (std::size_t g = 0; g < spec.rigid.size(); ++g) {
    auto& d = map.rigid_dofs[g];
    if (spec.rigid[g].pin_translation) {
      d[0] = d[1] = -1;
    } else {
      d[0] = next++;
      d[1] = next++;
    }
    d[2] = spec.rigid[g].pin_spin ? -1 : next++;
  }
  map.reduced_size = next;

  map.ptr.assign(2 * nn + 1, 0);
  map.offset = Vec::Zero(2 * nn);
  map.col.reserve(2 * nn);
  map.coef.reserve(2 * nn);
  for (int n = 0; n < nn; ++n)
    for (int c = 0; c < 2; ++c) {
      const int dof = 2 * n + c;
      switch (kind[n]) {
        case NodeKind::Free:
          map.col.push_back(first[n] + c);
          map.coef.push_back(1.0);
          break;
        case NodeKind::Slave:
          map.col.push_back(first[link[n]] + c);
          map.coef.push_back(1.0);
          break;
        case NodeKind::Fixed:
          map.offset(dof) = fixed[n](c);
          break;
        case NodeKind::Rigid: {
          const RigidGroup& g = spec.rigid[link[n]];
          const auto& d = map.rigid_dofs[link[n]];
          const Vec2 r = space.node(n) - g.center;
          if (d[c] >= 0) {
            map.col.push_back(d[c]);
            map.coef.push_back(1.0);
          }
          if (d[2] >= 0) {
            map.col.push_back(d[2]);
            map.coef.push_back(c == 0 ? -r.y() : r.x());
          }
          map.offset(dof) = (g.strain * r)(c);
          break;
        }
      }
      map.ptr[dof + 1] = static_cast<int>(map.col.size());
    }
  return map;
}

Vec ConstraintMap::expand(const Vec& reduced) const {
  require(reduced.size() == reduced_size, ErrorCode::InvalidArgument, "reduced vector size mismatch");
  Vec full = offset;
  for (int i = 0; i < full_size; ++i)
    for (int k = ptr[i]; k < ptr[i + 1]; ++k) full(i) += coef[k] * reduced(col[k]);
  return full;
}

Vec ConstraintMap::restrict_adjoint(const Vec& full) const {
  require(full.size() == full_size, ErrorCode::InvalidArgument, "full vector size mismatch");
  Vec r = Vec::Zero(reduced_size);
  for (int i = 0; i < full_size; ++i)
    for (int k = ptr[i]; k < ptr[i + 1]; ++k) r(col[k]) += coef[k] * full(i);
  return r;
}

Vec ConstraintMap::reduce(const Vec& full) const {
  require(full.size() == full_size, ErrorCode::InvalidArgument, "full vector size mismatch");
  std::vector<Eigen::Triplet<double, int>> trip;
  for (int i = 0; i < full_size; ++i)
    for (int k = ptr[i]; k < ptr[i + 1]; ++k) trip.emplace_back(i, col[k], coef[k]);
  SpMat E(full_size, reduced_size);
  E.setFromTriplets(trip.begin(), trip.end());
  const SpMat normal = E.transpose() * E;
  Eigen::SimplicialLDLT<SpMat> ldlt(normal);
  require(ldlt.info() == Eigen::Success, ErrorCode::InvalidArgument, "constraint map is not injective");
  return ldlt.solve(Vec(E.transpose() * (full - offset)));
}

void ConstraintMap::set_rigid_strains(const std::vector<Vec2>& nodes, const std::vector<Mat2>& strains) {
  require(strains.size() == rigid.size(), ErrorCode::InvalidArgument, "one strain per rigid group");
  if (periodic)
    for (const Mat2& a : strains) check_trace(a);
  for (std::size_t g = 0; g < rigid.size(); ++g) {
    rigid[g].strain = strains[g];
    for (int n : rigid[g].nodes) {
      const Vec2 v = strains[g] * (nodes[n] - rigid[g].center);
      offset(2 * n) = v.x();
      offset(2 * n + 1) = v.y();
    }
  }
}

PressureMap build_pressure_map(const PressureSpace& space, bool periodic, bool pin_one,
                               double periodic_tol) {
  PressureMap map;
  const int n = space.size();
  map.reduced_of_full.assign(n, -1);
  std::vector<int> master(n);
  for (int i = 0; i < n; ++i) master[i] = i;
  if (periodic && space.n_p1 > 0) {
    std::vector<Vec2> pts(space.n_p1);
    for (int v = 0; v < static_cast<int>(space.vertex_dof.size()); ++v)
      if (space.vertex_dof[v] >= 0) pts[space.vertex_dof[v]] = space.mesh->vertices[v];
    const PeriodicPairing pairing = periodic_pairing(pts, periodic_tol);
    for (int i = 0; i < space.n_p1; ++i) master[i] = pairing.master[i];
  }
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (master[i] != i) continue;
    if (pin_one && map.pinned < 0) {
      map.pinned = i;
      continue;
    }
    map.reduced_of_full[i] = next++;
  }
  for (int i = 0; i < n; ++i)
    if (master[i] != i) map.reduced_of_full[i] = map.reduced_of_full[master[i]];
  map.reduced_size = next;
  return map;
}

Vec PressureMap::expand(const Vec& reduced) const {
  Vec full = Vec::Zero(static_cast<int>(reduced_of_full.size()));
  for (std::size_t i = 0; i < reduced_of_full.size(); ++i)
    if (reduced_of_full[i] >= 0) full(static_cast<int>(i)) = reduced(reduced_of_full[i]);
  return full;
}

}  // namespace homsusp
