#include "homsusp/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "homsusp/error.hpp"

namespace homsusp {

namespace {

LineRule make_gauss_legendre(int n) {
  // Newton iteration on Legendre roots, then map [-1, 1] -> [0, 1].
  LineRule rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
    }
    rule.x[n - 1 - i] = 0.5 * (1.0 + z);
    rule.w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

TriangleRule make_deg5() {
  TriangleRule r;
  r.degree = 5;
  const double s15 = std::sqrt(15.0);
  const double a1 = (6.0 - s15) / 21.0;
  const double a2 = (6.0 + s15) / 21.0;
  const double w1 = (155.0 - s15) / 1200.0;
  const double w2 = (155.0 + s15) / 1200.0;
  r.bary.emplace_back(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
  r.w.push_back(0.225);
  for (double a : {a1, a2}) {
    const double b = 1.0 - 2.0 * a;
    const double w = (a == a1) ? w1 : w2;
    r.bary.emplace_back(a, a, b);
    r.bary.emplace_back(a, b, a);
    r.bary.emplace_back(b, a, a);
    for (int k = 0; k < 3; ++k) r.w.push_back(w);
  }
  return r;
}

TriangleRule make_collapsed(int n) {
  const LineRule& g = gauss_legendre(n);
  TriangleRule r;
  r.degree = 2 * n - 2;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double u = g.x[i];
      const double v = g.x[j] * (1.0 - u);
      r.bary.emplace_back(1.0 - u - v, u, v);
      r.w.push_back(2.0 * g.w[i] * g.w[j] * (1.0 - u));
    }
  }
  return r;
}

}  // namespace

const LineRule& gauss_legendre(int n) {
  require(n >= 1 && n <= 64, ErrorCode::InvalidArgument, "Gauss rule size out of range");
  static std::mutex mutex;
  static std::map<int, LineRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
  return it->second;
}

const TriangleRule& triangle_rule_deg5() {
  static const TriangleRule rule = make_deg5();
  return rule;
}

const TriangleRule& triangle_rule_collapsed(int n) {
  require(n >= 1 && n <= 32, ErrorCode::InvalidArgument, "collapsed rule size out of range");
  static std::mutex mutex;
  static std::map<int, TriangleRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_collapsed(n)).first;
  return it->second;
}

}  // namespace homsusp
