#include <Eigen/CholmodSupport>
#include <Eigen/SparseCholesky>
#include <Eigen/UmfPackSupport>
#include <unsupported/Eigen/SparseExtra>

#include <spdlog/spdlog.h>

#include "homsusp/error.hpp"
#include "homsusp/fem.hpp"

namespace homsusp {

struct SaddleSolver::Impl {
  SolverOptions options;
  int nu = 0;
  int np = 0;
  SpMat K;
  SpMat B;
  SpMat Bt;
  SpMat A;  // [K B^T; B 0], kept alive for UMFPACK and residuals
  Eigen::UmfPackLU<SpMat> lu;
  Eigen::CholmodDecomposition<SpMat, Eigen::Lower> chol;
  Eigen::SimplicialLDLT<SpMat> mass;
  bool have_mass = false;

  Vec apply(const Vec& u, const Vec& p) const {
    Vec r(nu + np);
    r.head(nu) = K * u;
    if (np > 0) {
      r.head(nu) += Bt * p;
      r.tail(np) = B * u;
    }
    return r;
  }
};

namespace {

void quiet(cholmod_common& c) {
  c.print = 0;
  c.error_handler = nullptr;
}

SpMat block_matrix(const SpMat& K, const SpMat& B) {
  const int nu = static_cast<int>(K.rows()), np = static_cast<int>(B.rows());
  std::vector<Eigen::Triplet<double, int>> trip;
  trip.reserve(K.nonZeros() + 2 * B.nonZeros());
  for (int j = 0; j < K.outerSize(); ++j)
    for (SpMat::InnerIterator it(K, j); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (int j = 0; j < B.outerSize(); ++j)
    for (SpMat::InnerIterator it(B, j); it; ++it) {
      trip.emplace_back(nu + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), nu + it.row(), it.value());
    }
  SpMat A(nu + np, nu + np);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

}  // namespace

SaddleSolver::SaddleSolver(const SaddleSystem& system, const SolverOptions& options)
    : impl_(std::make_unique<Impl>()) {
  Impl& s = *impl_;
  s.options = options;
  s.nu = static_cast<int>(system.K.rows());
  s.np = static_cast<int>(system.B.rows());
  require(system.K.cols() == s.nu && (s.np == 0 || system.B.cols() == s.nu),
          ErrorCode::InvalidArgument, "saddle system blocks have inconsistent sizes");
  s.K = system.K;
  s.B = system.B;
  s.Bt = s.B.transpose();

  if (!options.dump_prefix.empty()) {
    Eigen::saveMarket(s.K, options.dump_prefix + "_K.mtx");
    Eigen::saveMarket(s.B, options.dump_prefix + "_B.mtx");
  }

  if (s.options.method == SolverOptions::Method::Auto)
    s.options.method = s.nu + s.np <= options.direct_limit ? SolverOptions::Method::Direct
                                                           : SolverOptions::Method::Uzawa;
  const bool uzawa = s.options.method == SolverOptions::Method::Uzawa;
  const bool check = uzawa || (options.definiteness_check_limit > 0 &&
                               s.nu <= options.definiteness_check_limit);
  if (check) {
    quiet(s.chol.cholmod());
    s.chol.setMode(Eigen::CholmodSupernodalLLt);
    s.chol.compute(s.K);
    if (s.chol.info() != Eigen::Success)
      throw TracedError(ErrorCode::SolverDiverged,
                        "SolverDiverged: velocity block is not positive definite on the constrained space",
                        {});
  }
  if (uzawa) {
    if (system.Mp.rows() == s.np && s.np > 0) {
      s.mass.compute(system.Mp);
      s.have_mass = s.mass.info() == Eigen::Success;
    }
    return;
  }
  s.A = block_matrix(s.K, s.B);
  s.lu.umfpackControl()(UMFPACK_STRATEGY) = UMFPACK_STRATEGY_SYMMETRIC;
  s.lu.compute(s.A);
  if (s.lu.info() != Eigen::Success)
    throw TracedError(ErrorCode::SolverDiverged, "SolverDiverged: sparse LU factorization failed", {});
  spdlog::debug("saddle factorization: {} velocity + {} pressure dofs, nnz {}", s.nu, s.np,
                s.A.nonZeros());
}

SaddleSolver::~SaddleSolver() = default;

int SaddleSolver::velocity_size() const { return impl_->nu; }
int SaddleSolver::pressure_size() const { return impl_->np; }

SolveResult SaddleSolver::solve(const Vec& F, const Vec& G, const Vec* p0) const {
  const Impl& s = *impl_;
  require(F.size() == s.nu && G.size() == s.np, ErrorCode::InvalidArgument, "rhs size mismatch");
  SolveResult res;
  Vec b(s.nu + s.np);
  b.head(s.nu) = F;
  b.tail(s.np) = G;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.u = Vec::Zero(s.nu);
    res.p = Vec::Zero(s.np);
    res.trace = {0.0};
    return res;
  }

  if (s.options.method == SolverOptions::Method::Direct) {
    Vec x = s.lu.solve(b);
    Vec r = b - s.A * x;
    res.trace.push_back(r.norm() / bnorm);
    // A few steps of iterative refinement polish ill-conditioned solves.
    for (int it = 0; it < 3 && res.trace.back() > 1e-3 * s.options.tol; ++it) {
      x += s.lu.solve(r);
      r = b - s.A * x;
      res.trace.push_back(r.norm() / bnorm);
    }
    res.residual = res.trace.back();
    res.iterations = static_cast<int>(res.trace.size());
    if (!x.allFinite() || res.residual > s.options.tol)
      throw TracedError(ErrorCode::SolverDiverged,
                        "SolverDiverged: direct solve residual " + std::to_string(res.residual) +
                            " exceeds tolerance",
                        res.trace);
    res.u = x.head(s.nu);
    res.p = x.tail(s.np);
    return res;
  }

  // Uzawa: preconditioned CG on the Schur complement S = B K^-1 B^T.
  auto kinv = [&](const Vec& v) { return Vec(s.chol.solve(v)); };
  auto precond = [&](const Vec& v) { return s.have_mass ? Vec(s.mass.solve(v)) : v; };
  Vec p = Vec::Zero(s.np);
  if (p0 && p0->size() == s.np) p = *p0;
  if (s.np > 0) {
    Vec r = s.B * kinv(F - s.Bt * p) - G;
    Vec z = precond(r);
    Vec d = z;
    double rz = r.dot(z);
    res.trace.push_back(r.norm() / bnorm);
    int it = 0;
    while (r.norm() > 1e-2 * s.options.tol * bnorm) {
      if (++it > s.options.max_iterations || !std::isfinite(rz))
        throw TracedError(ErrorCode::SolverDiverged,
                          "SolverDiverged: Uzawa iteration did not converge", res.trace);
      const Vec sd = s.B * kinv(s.Bt * d);
      const double alpha = rz / d.dot(sd);
      p += alpha * d;
      r -= alpha * sd;
      z = precond(r);
      const double rz_new = r.dot(z);
      d = z + (rz_new / rz) * d;
      rz = rz_new;
      res.trace.push_back(r.norm() / bnorm);
    }
    res.iterations = it;
  }
  Vec u = kinv(F - s.Bt * p);
  Vec resid(s.nu + s.np);
  resid = b - s.apply(u, p);
  res.residual = resid.norm() / bnorm;
  res.trace.push_back(res.residual);
  if (!u.allFinite() || res.residual > s.options.tol)
    throw TracedError(ErrorCode::SolverDiverged,
                      "SolverDiverged: Uzawa residual " + std::to_string(res.residual) +
                          " exceeds tolerance",
                      res.trace);
  res.u = std::move(u);
  res.p = std::move(p);
  return res;
}

}  // namespace homsusp
