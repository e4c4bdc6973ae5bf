#pragma once

#include <cmath>

// Divergence-free velocity u = curl(x^2 (1-x)^2 y^2 (1-y)^2) with pressure
// p = x^3 - y^3 on the unit square, and the body force f = -mu lap u + grad p.
namespace oracle {

struct StokesSample {
  double u, v, ux, uy, vx, vy, p;
};

inline StokesSample manufactured(double x, double y) {
  StokesSample s;
  s.u = 2 * x * x * y * (x - 1) * (x - 1) * (y - 1) * (2 * y - 1);
  s.v = -2 * x * y * y * (x - 1) * (2 * x - 1) * (y - 1) * (y - 1);
  s.ux = 4 * x * y * (x - 1) * (2 * x - 1) * (y - 1) * (2 * y - 1);
  s.uy = 2 * x * x * (x - 1) * (x - 1) * (6 * y * y - 6 * y + 1);
  s.vx = -2 * y * y * (y - 1) * (y - 1) * (6 * x * x - 6 * x + 1);
  s.vy = -s.ux;
  s.p = x * x * x - y * y * y;
  return s;
}

inline void manufactured_force(double mu, double x, double y, double& fx, double& fy) {
  const double x2 = x * x, x3 = x2 * x, x4 = x3 * x, y2 = y * y, y3 = y2 * y, y4 = y3 * y;
  fx = mu * (-24 * x4 * y + 12 * x4 + 48 * x3 * y - 24 * x3 - 48 * x2 * y3 + 72 * x2 * y2 - 48 * x2 * y +
             12 * x2 + 48 * x * y3 - 72 * x * y2 + 24 * x * y - 8 * y3 + 12 * y2 - 4 * y) +
       3 * x2;
  fy = mu * (48 * x3 * y2 - 48 * x3 * y + 8 * x3 - 72 * x2 * y2 + 72 * x2 * y - 12 * x2 + 24 * x * y4 -
             48 * x * y3 + 48 * x * y2 - 24 * x * y + 4 * x - 12 * y4 + 24 * y3 - 12 * y2) -
       3 * y2;
}

}  // namespace oracle
