#include <cmath>
#include <unordered_map>

#include "homsusp/error.hpp"
#include "homsusp/geometry.hpp"

namespace homsusp {

std::vector<LatticeIndex> enumerate_lattice(const Box& domain, const Rational& eps) {
  require(eps > Rational(0), ErrorCode::InvalidArgument, "eps must be positive");
  const Rational half(1, 2);
  std::array<std::int64_t, 2> kmin{}, kmax{};
  for (int d = 0; d < 2; ++d) {
    require(domain.lo[d] < domain.hi[d], ErrorCode::InvalidArgument, "empty domain box");
    // eps (k - 1/2) > lo  <=>  k > lo / eps + 1/2, and symmetrically for hi.
    kmin[d] = (domain.lo[d] / eps + half).floor() + 1;
    kmax[d] = (domain.hi[d] / eps - half).ceil() - 1;
  }
  std::vector<LatticeIndex> out;
  for (std::int64_t kx = kmin[0]; kx <= kmax[0]; ++kx)
    for (std::int64_t ky = kmin[1]; ky <= kmax[1]; ++ky) out.push_back({kx, ky});
  return out;
}

namespace {

struct KeyHash {
  std::size_t operator()(const std::pair<long long, long long>& k) const {
    return std::hash<long long>()(k.first * 1000003LL) ^ std::hash<long long>()(k.second);
  }
};

// Tolerant vertex welding for blocks that share boundaries.
class VertexPool {
 public:
  VertexPool(std::vector<Vec2>& out, double tol) : out_(out), tol_(tol), bin_(10.0 * tol) {}

  int insert(const Vec2& p) {
    const long long kx = std::llround(p.x() / bin_), ky = std::llround(p.y() / bin_);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = grid_.find({kx + dx, ky + dy});
        if (it == grid_.end()) continue;
        for (int j : it->second)
          if ((out_[j] - p).lpNorm<Eigen::Infinity>() <= tol_) return j;
      }
    const int id = static_cast<int>(out_.size());
    out_.push_back(p);
    grid_[{kx, ky}].push_back(id);
    return id;
  }

 private:
  std::vector<Vec2>& out_;
  double tol_;
  double bin_;
  std::unordered_map<std::pair<long long, long long>, std::vector<int>, KeyHash> grid_;
};

}  // namespace

PerforatedMesh build_perforated_mesh(const Box& domain, const InclusionShape& shape,
                                     const Rational& eps, double h_per_cell,
                                     const CellMeshOptions& options) {
  require(eps.to_double() > 0.0, ErrorCode::InvalidArgument, "eps must be positive");
  PerforatedMesh pm;
  pm.domain = domain;
  pm.eps = eps;
  pm.particles = enumerate_lattice(domain, eps);
  if (pm.particles.empty())
    fail(ErrorCode::NoParticles, "no lattice cell eps(k + Y) fits strictly inside the domain (eps = " +
                                     eps.str() + ")");
  pm.cell = build_cell_mesh(shape, h_per_cell, options);
  const CellMesh& cell = pm.cell;
  const int m = cell.segments;
  const double e = eps.to_double();

  const Rational half(1, 2);
  std::array<std::vector<double>, 2> breaks;
  std::array<std::int64_t, 2> kmin{}, kmax{};
  kmin[0] = pm.particles.front().x;
  kmax[0] = pm.particles.back().x;
  kmin[1] = pm.particles.front().y;
  kmax[1] = pm.particles.back().y;
  for (int d = 0; d < 2; ++d) {
    breaks[d].push_back(domain.lo_d(d));
    for (std::int64_t k = kmin[d]; k <= kmax[d] + 1; ++k)
      breaks[d].push_back((eps * (Rational(k) - half)).to_double());
    breaks[d].push_back(domain.hi_d(d));
  }

  VertexPool pool(pm.vertices, 1e-9 * e / m);
  const int ncol = static_cast<int>(breaks[0].size()) - 1;
  const int nrow = static_cast<int>(breaks[1].size()) - 1;
  pm.cell_vertex_map.resize(pm.particles.size());
  pm.centers.resize(pm.particles.size());

  for (int bx = 0; bx < ncol; ++bx)
    for (int by = 0; by < nrow; ++by) {
      const bool cx = bx > 0 && bx < ncol - 1, cy = by > 0 && by < nrow - 1;
      if (cx && cy) {
        const std::int64_t kx = kmin[0] + bx - 1, ky = kmin[1] + by - 1;
        const int p = static_cast<int>((kx - kmin[0]) * (kmax[1] - kmin[1] + 1) + (ky - kmin[1]));
        const Vec2 center = (Vec2(static_cast<double>(kx), static_cast<double>(ky))) * e;
        pm.centers[p] = center;
        auto& vmap = pm.cell_vertex_map[p];
        vmap.resize(cell.vertices.size());
        for (std::size_t v = 0; v < cell.vertices.size(); ++v) {
          const Vec2& y = cell.vertices[v];
          // Boundary points are placed from the block breakpoints to weld exactly.
          Vec2 x = center + e * y;
          if (y.x() == -0.5) x.x() = breaks[0][bx];
          if (y.x() == 0.5) x.x() = breaks[0][bx + 1];
          if (y.y() == -0.5) x.y() = breaks[1][by];
          if (y.y() == 0.5) x.y() = breaks[1][by + 1];
          vmap[v] = pool.insert(x);
        }
        const int offset = pm.num_triangles();
        for (int t = 0; t < cell.num_triangles(); ++t) {
          const auto& tri = cell.triangles[t];
          pm.triangles.push_back({vmap[tri[0]], vmap[tri[1]], vmap[tri[2]]});
          pm.region.push_back(cell.region[t]);
          pm.particle_of.push_back(p);
          pm.source_triangle.push_back(t);
        }
        for (const auto& f : cell.facets) {
          InterfaceFacet g = f;
          g.a = vmap[f.a];
          g.b = vmap[f.b];
          g.fluid_triangle = offset + f.fluid_triangle;
          g.particle = p;
          pm.facets.push_back(g);
        }
        continue;
      }
      const double w = breaks[0][bx + 1] - breaks[0][bx];
      const double hgt = breaks[1][by + 1] - breaks[1][by];
      const int nx = cx ? m : std::max(1, static_cast<int>(std::lround(w * m / e)));
      const int ny = cy ? m : std::max(1, static_cast<int>(std::lround(hgt * m / e)));
      const Mesh block = criss_cross({breaks[0][bx], breaks[1][by]},
                                     {breaks[0][bx + 1], breaks[1][by + 1]}, nx, ny);
      std::vector<int> vmap(block.vertices.size());
      for (std::size_t v = 0; v < block.vertices.size(); ++v) vmap[v] = pool.insert(block.vertices[v]);
      for (const auto& tri : block.triangles) {
        pm.triangles.push_back({vmap[tri[0]], vmap[tri[1]], vmap[tri[2]]});
        pm.region.push_back(Region::Fluid);
        pm.particle_of.push_back(-1);
        pm.source_triangle.push_back(-1);
      }
    }

  for (int t = 0; t < pm.num_triangles(); ++t)
    if (!(pm.signed_area(t) > 0.0))
      fail(ErrorCode::MeshGenFailure, "perforated mesh has a degenerate triangle");
  return pm;
}

}  // namespace homsusp
