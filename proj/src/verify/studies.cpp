#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "homsusp/error.hpp"
#include "homsusp/verify.hpp"

namespace homsusp {

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  const int workers = std::clamp(jobs, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double shear_viscosity(const EffectiveTensor& tensor) { return tensor.mu_star(1, 1); }

std::vector<ConvergenceRow> ConvergenceReport::series(std::uint64_t seed) const {
  std::vector<ConvergenceRow> out;
  for (const auto& r : rows)
    if (r.seed == seed) out.push_back(r);
  return out;
}

int ConvergenceReport::seeds_decreasing(double ConvergenceRow::*metric) const {
  std::vector<std::uint64_t> seeds;
  for (const auto& r : rows)
    if (std::find(seeds.begin(), seeds.end(), r.seed) == seeds.end()) seeds.push_back(r.seed);
  int count = 0;
  for (std::uint64_t s : seeds) {
    const auto rs = series(s);
    bool dec = rs.size() >= 2;
    for (std::size_t i = 1; i < rs.size(); ++i) dec = dec && rs[i].*metric < rs[i - 1].*metric;
    count += dec;
  }
  return count;
}

int ConvergenceReport::rows_corrector_better() const {
  return static_cast<int>(
      std::count_if(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.corrected_h1 < r.h1; }));
}

ConvergenceReport convergence_study(const ConvergenceConfig& config) {
  using Clock = std::chrono::steady_clock;
  require(!config.eps.empty() && !config.seeds.empty(), ErrorCode::InvalidArgument,
          "convergence study needs eps values and seeds");
  require(static_cast<bool>(config.body_force) || config.force.has_value(), ErrorCode::InvalidArgument,
          "convergence study needs a body force or a surface force");
  if (config.force)
    require(config.force->shape().kind == config.shape.kind && config.force->shape().phi == config.shape.phi,
            ErrorCode::InvalidArgument, "force model and geometry use different inclusions");
  const AmplitudeLaw law = config.force ? config.force->law() : AmplitudeLaw::uniform(0.5, 1.5);

  ConvergenceReport report;
  const auto cell_mesh = std::make_shared<const CellMesh>(build_cell_mesh(config.shape, config.h_per_cell));
  const CellSolver cell(cell_mesh, config.mu, config.solver);
  const EffectiveResult eff = effective_tensor(cell);
  report.tensor = eff.tensor;

  HomogenizedProblem hp;
  hp.mesh = std::make_shared<const MacroMesh>(build_macro_mesh(config.domain, config.macro_h));
  hp.tensor = eff.tensor;
  hp.force = config.force;
  hp.field = RandomCellField(config.seeds.front(), law);
  hp.body_force = config.body_force;
  hp.picard = config.picard;
  hp.solver = config.solver;
  hp.expectation = config.expectation;
  hp.fstar_samples = config.fstar_samples;
  const HomogenizedSolution ustar = solve_homogenized(hp);
  report.energy_star = ustar.energy;
  spdlog::info("homogenized solve: E* = {:.10e}, {} Picard steps", ustar.energy, ustar.trace.iterations);

  const int ne = static_cast<int>(config.eps.size()), ns = static_cast<int>(config.seeds.size());
  report.rows.resize(static_cast<std::size_t>(ne) * ns);
  parallel_for(ne, config.jobs, [&](int i) {
    const Rational& eps = config.eps[i];
    MicroProblem mp;
    mp.mesh = std::make_shared<const PerforatedMesh>(
        build_perforated_mesh(config.domain, config.shape, eps, config.h_per_cell));
    mp.mu = config.mu;
    mp.force = config.force;
    mp.body_force = config.body_force;
    mp.picard = config.picard;
    mp.solver = config.solver;
    const MicroSolver solver(mp);
    const Corrector corrector(*mp.mesh, eff.correctors);
    std::optional<MixedField> previous;
    for (int j = 0; j < ns; ++j) {
      const auto t0 = Clock::now();
      const RandomCellField field(config.seeds[j], law);
      const MicroSolution s = solver.solve(field, previous ? &*previous : nullptr);
      const GapNorms g = gap_norms(s.u, ustar.u, corrector);
      ConvergenceRow& r = report.rows[static_cast<std::size_t>(i) * ns + j];
      r.eps = eps;
      r.seed = config.seeds[j];
      r.energy_micro = s.energy;
      r.energy_star = ustar.energy;
      r.energy_gap = std::abs(s.energy - ustar.energy);
      r.l2 = g.l2;
      r.h1 = g.h1;
      r.corrected_h1 = g.corrected_h1;
      r.picard_iterations = s.trace.iterations;
      r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      spdlog::info("eps {} seed {}: E {:.8e} |E-E*| {:.3e} L2 {:.3e} H1 {:.3e} corrected {:.3e} ({:.1f} s)", eps.str(),
                   r.seed, r.energy_micro, r.energy_gap, r.l2, r.h1, r.corrected_h1, r.seconds);
      previous = s.u;
    }
  });

  auto& md = report.metadata;
  md["shape"] = std::string(to_string(config.shape.kind));
  md["phi"] = std::to_string(config.shape.phi);
  md["mu"] = std::to_string(config.mu);
  md["profile"] = config.force ? std::string(to_string(config.force->profile().kind)) : "none";
  md["body_force"] = config.body_force ? config.body_force_name : "none";
  md["h_per_cell"] = std::to_string(config.h_per_cell);
  md["macro_h"] = std::to_string(config.macro_h);
  md["cell_triangles"] = std::to_string(cell_mesh->num_triangles());
  md["macro_triangles"] = std::to_string(hp.mesh->num_triangles());
  return report;
}

DiluteReport dilute_study(const InclusionShape& shape, const std::vector<double>& phi, const std::vector<double>& h,
                          double mu, int jobs) {
  require(phi.size() >= 2, ErrorCode::InvalidArgument, "dilute study needs at least two volume fractions");
  require(h.size() >= 2, ErrorCode::InvalidArgument, "dilute study needs at least two mesh sizes");
  for (double p : phi) require(p > 0.0 && p <= 0.05, ErrorCode::InvalidArgument, "dilute study expects phi in (0, 0.05]");
  DiluteReport r;
  r.phi = phi;
  r.h = h;
  std::sort(r.h.begin(), r.h.end(), std::greater<>());
  const int np = static_cast<int>(phi.size()), nh = static_cast<int>(r.h.size());
  r.points.resize(static_cast<std::size_t>(np) * nh);
  parallel_for(np * nh, jobs, [&](int k) {
    InclusionShape s = shape;
    s.phi = phi[k / nh];
    const double hk = r.h[k % nh];
    const auto mesh = std::make_shared<const CellMesh>(build_cell_mesh(s, hk));
    const EffectiveResult eff = effective_tensor(CellSolver(mesh, mu));
    r.points[k] = {s.phi, hk, shear_viscosity(eff.tensor) / mu - 1.0};
    spdlog::info("dilute phi {} h {}: excess {:.8f}", s.phi, hk, r.points[k].excess);
  });

  auto value = [&](int i, int j) { return r.points[static_cast<std::size_t>(i) * nh + j].excess; };
  if (nh >= 3) {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < np; ++i) {
      const double d0 = value(i, nh - 3) - value(i, nh - 2), d1 = value(i, nh - 2) - value(i, nh - 1);
      if (d0 != 0.0 && d1 != 0.0 && d0 / d1 > 0.0) {
        sum += std::log(d0 / d1) / std::log(r.h[nh - 2] / r.h[nh - 1]);
        ++count;
      }
    }
    if (count > 0) r.rate = sum / count;
  }
  const double ratio = std::pow(r.h[nh - 2] / r.h[nh - 1], r.rate);
  std::vector<double> finest(np);
  for (int i = 0; i < np; ++i) {
    finest[i] = value(i, nh - 1);
    const double ext = finest[i] + (finest[i] - value(i, nh - 2)) / (ratio - 1.0);
    r.extrapolated.push_back(ext);
    r.discretization_error.push_back(std::abs(finest[i] - ext));
  }
  auto fit = [&](const std::vector<double>& y, double& slope, double& intercept) {
    Eigen::MatrixXd A(np, 2);
    Eigen::VectorXd b(np);
    for (int i = 0; i < np; ++i) {
      A(i, 0) = phi[i];
      A(i, 1) = 1.0;
      b(i) = y[i];
    }
    const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
    slope = c(0);
    intercept = c(1);
  };
  double unused = 0.0;
  fit(r.extrapolated, r.slope, r.intercept);
  fit(finest, r.slope_finest, unused);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < np; ++i) {
    num += phi[i] * r.extrapolated[i];
    den += phi[i] * phi[i];
  }
  r.slope_origin = num / den;
  return r;
}

CsvTable convergence_table(const ConvergenceReport& report) {
  CsvTable t({"eps", "seed", "energy_micro", "l2_gap", "h1_gap", "corrected_h1_gap", "energy_star", "energy_gap",
              "picard_iterations"},
             "convergence");
  for (const auto& r : report.rows)
    t.add_row({r.eps.str(), std::to_string(r.seed), format_double(r.energy_micro), format_double(r.l2),
               format_double(r.h1), format_double(r.corrected_h1), format_double(r.energy_star),
               format_double(r.energy_gap), std::to_string(r.picard_iterations)});
  return t;
}

CsvTable dilute_table(const DiluteReport& report) {
  CsvTable t({"phi", "h", "excess", "discretization_error"}, "dilute");
  for (const auto& p : report.points) t.add_row({format_double(p.phi), format_double(p.h), format_double(p.excess), ""});
  for (std::size_t i = 0; i < report.phi.size(); ++i)
    t.add_row({format_double(report.phi[i]), "0", format_double(report.extrapolated[i]),
               format_double(report.discretization_error[i])});
  return t;
}

}  // namespace homsusp
