#include "homsusp/error.hpp"
#include "homsusp/fem.hpp"

namespace homsusp {

std::array<double, 6> p2_values(const Eigen::Vector3d& l) {
  return {l(0) * (2.0 * l(0) - 1.0), l(1) * (2.0 * l(1) - 1.0), l(2) * (2.0 * l(2) - 1.0),
          4.0 * l(0) * l(1),         4.0 * l(1) * l(2),         4.0 * l(2) * l(0)};
}

P2Grad p2_gradients(const Eigen::Vector3d& l, const BaryGrad& g) {
  P2Grad out;
  for (int i = 0; i < 3; ++i) out.row(i) = (4.0 * l(i) - 1.0) * g.row(i);
  out.row(3) = 4.0 * (l(1) * g.row(0) + l(0) * g.row(1));
  out.row(4) = 4.0 * (l(2) * g.row(1) + l(1) * g.row(2));
  out.row(5) = 4.0 * (l(0) * g.row(2) + l(2) * g.row(0));
  return out;
}

BaryGrad barycentric_gradients(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.vertices[tri[0]];
  const Vec2& b = mesh.vertices[tri[1]];
  const Vec2& c = mesh.vertices[tri[2]];
  const double det = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  BaryGrad g;
  g << (b.y() - c.y()) / det, (c.x() - b.x()) / det, (c.y() - a.y()) / det, (a.x() - c.x()) / det,
      (a.y() - b.y()) / det, (b.x() - a.x()) / det;
  return g;
}

Vec2 to_physical(const Mesh& mesh, int t, const Eigen::Vector3d& l) {
  const auto& tri = mesh.triangles[t];
  return l(0) * mesh.vertices[tri[0]] + l(1) * mesh.vertices[tri[1]] + l(2) * mesh.vertices[tri[2]];
}

P2Space::P2Space(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
  require(mesh_ != nullptr, ErrorCode::InvalidArgument, "P2 space needs a mesh");
  const Mesh& m = *mesh_;
  nodes_ = m.vertices;
  edges_of_vertex_.assign(m.vertices.size(), {});
  elements_.resize(m.triangles.size());
  static constexpr int kEdge[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles[t];
    auto& el = elements_[t];
    for (int k = 0; k < 3; ++k) el[k] = tri[k];
    for (int e = 0; e < 3; ++e) {
      const int a = tri[kEdge[e][0]], b = tri[kEdge[e][1]];
      const int lo = std::min(a, b), hi = std::max(a, b);
      int node = -1;
      for (const auto& [other, n] : edges_of_vertex_[lo])
        if (other == hi) {
          node = n;
          break;
        }
      if (node < 0) {
        node = static_cast<int>(nodes_.size());
        nodes_.push_back(0.5 * (m.vertices[a] + m.vertices[b]));
        edges_of_vertex_[lo].emplace_back(hi, node);
      }
      el[3 + e] = node;
    }
  }
}

int P2Space::edge_node(int a, int b) const {
  const int lo = std::min(a, b), hi = std::max(a, b);
  for (const auto& [other, n] : edges_of_vertex_[lo])
    if (other == hi) return n;
  return -1;
}

std::vector<char> P2Space::region_nodes(Region r) const {
  std::vector<char> mask(nodes_.size(), 0);
  for (int t = 0; t < mesh_->num_triangles(); ++t)
    if (mesh_->region[t] == r)
      for (int n : elements_[t]) mask[n] = 1;
  return mask;
}

namespace {

PressureSpace make_pressure(std::shared_ptr<const Mesh> mesh, const std::vector<char>& p1,
                            const std::vector<int>& groups) {
  PressureSpace s;
  s.mesh = mesh;
  s.p1_triangle = p1;
  s.vertex_dof.assign(mesh->vertices.size(), -1);
  for (int t = 0; t < mesh->num_triangles(); ++t)
    if (p1[t])
      for (int v : mesh->triangles[t])
        if (s.vertex_dof[v] < 0) s.vertex_dof[v] = 0;
  for (int& d : s.vertex_dof)
    if (d == 0) d = s.n_p1++;
  s.group_dof.assign(mesh->triangles.size(), -1);
  int max_group = -1;
  for (int t = 0; t < mesh->num_triangles(); ++t)
    if (!groups.empty() && groups[t] >= 0 && !p1[t]) {
      s.group_dof[t] = s.n_p1 + groups[t];
      max_group = std::max(max_group, groups[t]);
    }
  s.n_groups = max_group + 1;
  return s;
}

}  // namespace

PressureSpace PressureSpace::all_p1(std::shared_ptr<const Mesh> mesh) {
  std::vector<char> p1(mesh->triangles.size(), 1);
  return make_pressure(mesh, p1, {});
}

PressureSpace PressureSpace::fluid_p1(std::shared_ptr<const Mesh> mesh) {
  std::vector<char> p1(mesh->triangles.size(), 0);
  for (int t = 0; t < mesh->num_triangles(); ++t) p1[t] = mesh->region[t] == Region::Fluid;
  return make_pressure(mesh, p1, {});
}

PressureSpace PressureSpace::fluid_p1_plus_groups(std::shared_ptr<const Mesh> mesh,
                                                  const std::vector<int>& group_of_triangle) {
  std::vector<char> p1(mesh->triangles.size(), 0);
  for (int t = 0; t < mesh->num_triangles(); ++t) p1[t] = mesh->region[t] == Region::Fluid;
  return make_pressure(mesh, p1, group_of_triangle);
}

double PressureSpace::evaluate(const Vec& p, int t, const Eigen::Vector3d& l) const {
  if (p1_triangle[t]) {
    const auto& tri = mesh->triangles[t];
    return l(0) * p(vertex_dof[tri[0]]) + l(1) * p(vertex_dof[tri[1]]) + l(2) * p(vertex_dof[tri[2]]);
  }
  if (group_dof[t] >= 0) return p(group_dof[t]);
  return 0.0;
}

}  // namespace homsusp
