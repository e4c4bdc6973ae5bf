#include <cmath>
#include <unordered_map>

#include "homsusp/error.hpp"
#include "homsusp/geometry.hpp"

namespace homsusp {

namespace {

struct KeyHash {
  std::size_t operator()(const std::pair<long long, long long>& k) const {
    return std::hash<long long>()(k.first * 1000003LL) ^ std::hash<long long>()(k.second);
  }
};

}  // namespace

PeriodicPairing periodic_pairing(std::span<const Vec2> points, double tol) {
  const double bin = std::max(1e3 * tol, 1e-9);
  std::unordered_map<std::pair<long long, long long>, std::vector<int>, KeyHash> grid;
  auto key = [bin](const Vec2& p) {
    return std::make_pair(std::llround(p.x() / bin), std::llround(p.y() / bin));
  };
  auto on = [tol](double v, double face) { return std::abs(v - face) <= tol; };

  int left = 0, right = 0, bottom = 0, top = 0;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    const Vec2& p = points[i];
    left += on(p.x(), -0.5);
    right += on(p.x(), 0.5);
    bottom += on(p.y(), -0.5);
    top += on(p.y(), 0.5);
    if (on(p.x(), -0.5) || on(p.y(), -0.5)) grid[key(p)].push_back(i);
  }
  if (left != right || bottom != top)
    fail(ErrorCode::NonMatchingFaces, "opposite faces of Y carry different numbers of points");

  PeriodicPairing pairing;
  pairing.master.resize(points.size());
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    const Vec2& p = points[i];
    const bool sx = on(p.x(), 0.5), sy = on(p.y(), 0.5);
    pairing.master[i] = i;
    if (!sx && !sy) continue;
    Vec2 target = p;
    if (sx) target.x() = -0.5;
    if (sy) target.y() = -0.5;
    const auto [kx, ky] = key(target);
    int found = -1;
    for (long long dx = -1; dx <= 1 && found < 0; ++dx)
      for (long long dy = -1; dy <= 1 && found < 0; ++dy) {
        auto it = grid.find({kx + dx, ky + dy});
        if (it == grid.end()) continue;
        for (int j : it->second)
          if ((points[j] - target).lpNorm<Eigen::Infinity>() <= tol) {
            found = j;
            break;
          }
      }
    if (found < 0)
      fail(ErrorCode::NonMatchingFaces,
           "no periodic partner for boundary point (" + std::to_string(p.x()) + ", " +
               std::to_string(p.y()) + ")");
    pairing.master[i] = found;
    ++pairing.slaves;
  }
  return pairing;
}

PeriodicPairing periodic_dof_map(const Mesh& mesh, double tol) {
  return periodic_pairing(mesh.vertices, tol);
}

}  // namespace homsusp
