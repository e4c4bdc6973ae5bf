#include <algorithm>
#include <filesystem>
#include <iostream>

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <umfpack.h>

#include "homsusp/app.hpp"
#include "homsusp/error.hpp"
#include "homsusp/io.hpp"
#include "homsusp/verify.hpp"

namespace homsusp {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct Artifacts {
  fs::path dir;
  std::vector<std::string> files;

  std::string path(const std::string& name) {
    files.push_back(name);
    return (dir / name).string();
  }
};

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text(path.string())); }

std::vector<std::uint64_t> seeds_of(const RunConfig& c) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < c.verify.seed_count; ++i) s.push_back(c.seed + static_cast<std::uint64_t>(i));
  return s;
}

std::shared_ptr<const CellMesh> cell_mesh(const RunConfig& c, double h) {
  return std::make_shared<const CellMesh>(build_cell_mesh(make_shape(c), h));
}

Mat2 strain_of(const RunConfig& c) {
  Mat2 A;
  A << c.cell.strain[0], c.cell.strain[1], c.cell.strain[2], c.cell.strain[3];
  return A;
}

Expectation expectation_of(const RunConfig& c) {
  return c.forces.expectation == "monte_carlo" ? Expectation::MonteCarlo : Expectation::ClosedForm;
}

AmplitudeLaw law_of(const RunConfig& c, const std::optional<SurfaceForceModel>& model) {
  if (model) return model->law();
  return c.forces.law == "lognormal" ? AmplitudeLaw::lognormal(c.forces.mu_ln, c.forces.sigma_ln)
                                     : AmplitudeLaw::uniform(c.forces.lo, c.forces.hi);
}

ConvergenceConfig convergence_config(const RunConfig& c) {
  ConvergenceConfig cc;
  cc.domain = make_domain(c);
  cc.shape = make_shape(c);
  cc.mu = c.cell.mu;
  cc.force = make_force_model(c);
  cc.body_force = make_body_force(c);
  cc.body_force_name = c.macro.body_force;
  cc.eps.clear();
  for (const auto& e : c.verify.eps) cc.eps.push_back(Rational::parse(e));
  cc.seeds = seeds_of(c);
  cc.h_per_cell = c.geometry.h_per_cell;
  cc.macro_h = c.macro.h;
  cc.picard = {c.micro.picard.theta, c.micro.picard.max_iterations, c.micro.picard.tol};
  cc.solver = make_solver_options(c);
  cc.expectation = expectation_of(c);
  cc.fstar_samples = c.forces.samples;
  cc.jobs = c.jobs;
  return cc;
}

void run_cell(const RunConfig& c, Artifacts& out) {
  const CellSolver solver(cell_mesh(c, c.cell.h), c.cell.mu, make_solver_options(c));
  const Mat2 A = strain_of(c);
  const CellSolution s = solver.solve(A);
  const CellDiagnostics d = solver.diagnose(s);
  CsvTable t({"A11", "A12", "A21", "A22", "dissipation", "rigid_defect", "discrete_div", "velocity_mean",
              "pressure_mean"},
             "cell");
  t.add_row(std::vector<double>{A(0, 0), A(0, 1), A(1, 0), A(1, 1), s.dissipation, d.rigid_defect, d.discrete_div,
                                d.velocity_mean, d.pressure_mean});
  t.write(out.path("cell.csv"));
  write_field_vtk(s.chi, out.path("chi.vtk"), "chi");
  spdlog::info("cell problem: dissipation {:.10e}", s.dissipation);
}

void run_tensor(const RunConfig& c, Artifacts& out) {
  const CellSolver solver(cell_mesh(c, c.cell.h), c.cell.mu, make_solver_options(c));
  const EffectiveResult r = effective_tensor(solver);
  const EffectiveTensor& T = r.tensor;
  CsvTable t({"quantity", "a", "b", "value"}, "tensor");
  auto matrix = [&](const char* name, const Eigen::Matrix2d& M) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) t.add_row({name, std::to_string(a + 1), std::to_string(b + 1), format_double(M(a, b))});
  };
  matrix("C", T.C);
  matrix("C_raw", T.C_raw);
  matrix("C_energy", T.C_energy);
  matrix("mu_star", T.mu_star);
  t.add_row({"mu", "", "", format_double(T.mu)});
  t.add_row({"shear_viscosity", "", "", format_double(shear_viscosity(T))});
  t.add_row({"symmetry_defect", "", "", format_double(T.symmetry_defect)});
  t.add_row({"min_eigenvalue", "", "", format_double(T.min_eigenvalue)});
  t.write(out.path("tensor.csv"));
  CsvTable basis({"a", "E11", "E12", "E21", "E22"}, "deviatoric_basis");
  for (std::size_t a = 0; a < T.basis.size(); ++a) {
    const Mat2& E = T.basis[a];
    basis.add_row(std::vector<double>{static_cast<double>(a + 1), E(0, 0), E(0, 1), E(1, 0), E(1, 1)});
  }
  basis.write(out.path("basis.csv"));
  for (std::size_t a = 0; a < r.correctors.size(); ++a)
    write_field_vtk(r.correctors[a].chi, out.path("chi_" + std::to_string(a + 1) + ".vtk"), "chi");
  spdlog::info("mu* = [[{:.8f}, {:.8f}], [{:.8f}, {:.8f}]]", T.mu_star(0, 0), T.mu_star(0, 1), T.mu_star(1, 0),
               T.mu_star(1, 1));
}

void run_fstar(const RunConfig& c, Artifacts& out) {
  const auto model = make_force_model(c);
  const RandomCellField field(c.seed, law_of(c, model));
  CsvTable t({"z1", "z2", "f1", "f2", "half_width1", "half_width2", "samples"}, "fstar");
  for (const auto& z : c.forces.z) {
    ForceEstimate e;
    if (model) e = homogenized_force(*model, Vec2(z[0], z[1]), c.forces.samples, field, expectation_of(c));
    t.add_row(std::vector<double>{z[0], z[1], e.value.x(), e.value.y(), e.half_width.x(), e.half_width.y(),
                                  static_cast<double>(e.samples)});
  }
  t.write(out.path("fstar.csv"));
}

void run_ergodic(const RunConfig& c, Artifacts& out) {
  const auto model = make_force_model(c);
  const AmplitudeLaw law = law_of(c, model);
  const Rational eps = Rational::parse(c.forces.ergodic_eps);
  const Box U = make_domain(c);
  const VectorFn zero = [](const Vec2&) { return Vec2(0.0, 0.0); };
  const auto h = [](const Vec2&, double a) { return a; };
  const double cells = U.volume() / (eps.to_double() * eps.to_double());
  const double expected = law.mean() * U.volume();
  const double bound = 4.0 * law.stddev() * U.volume() / std::sqrt(cells);
  CsvTable t({"seed", "eps", "estimate", "expected", "deviation", "bound"}, "ergodic");
  int inside = 0;
  for (int i = 0; i < c.forces.ergodic_seeds; ++i) {
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(i);
    const double est = ergodic_average(h, zero, U, eps, RandomCellField(seed, law), c.forces.ergodic_midpoints);
    inside += std::abs(est - expected) <= bound;
    t.add_row({std::to_string(seed), eps.str(), format_double(est), format_double(expected),
               format_double(est - expected), format_double(bound)});
  }
  t.write(out.path("ergodic.csv"));
  spdlog::info("ergodic: {}/{} seeds within 4 sigma / sqrt(N)", inside, c.forces.ergodic_seeds);
}

void run_macro(const RunConfig& c, Artifacts& out) {
  const CellSolver solver(cell_mesh(c, c.cell.h), c.cell.mu, make_solver_options(c));
  HomogenizedProblem hp;
  hp.mesh = std::make_shared<const MacroMesh>(build_macro_mesh(make_domain(c), c.macro.h));
  hp.tensor = effective_tensor(solver).tensor;
  hp.force = make_force_model(c);
  hp.field = RandomCellField(c.seed, law_of(c, hp.force));
  hp.body_force = make_body_force(c);
  hp.picard = {c.macro.picard.theta, c.macro.picard.max_iterations, c.macro.picard.tol};
  hp.solver = make_solver_options(c);
  hp.expectation = expectation_of(c);
  hp.fstar_samples = c.forces.samples;
  hp.tabulate = c.macro.tabulate;
  hp.table_points = c.macro.table_points;
  const HomogenizedSolution s = solve_homogenized(hp);
  CsvTable t({"energy", "picard_iterations", "converged", "weak_residual", "div_residual"}, "macro");
  t.add_row({format_double(s.energy), std::to_string(s.trace.iterations), s.trace.converged ? "1" : "0",
             format_double(s.weak_residual), format_double(s.div_residual)});
  t.write(out.path("macro.csv"));
  CsvTable trace({"iteration", "increment", "energy"}, "picard");
  for (std::size_t i = 0; i < s.trace.increments.size(); ++i)
    trace.add_row({std::to_string(i + 1), format_double(s.trace.increments[i]),
                   i < s.trace.energies.size() ? format_double(s.trace.energies[i]) : ""});
  trace.write(out.path("picard.csv"));
  write_field_vtk(s.u, out.path("u_star.vtk"), "u_star");
  spdlog::info("homogenized energy {:.10e} after {} Picard steps", s.energy, s.trace.iterations);
}

void run_micro(const RunConfig& c, Artifacts& out) {
  ConvergenceConfig cc = convergence_config(c);
  cc.eps = {Rational::parse(c.geometry.eps)};
  cc.seeds = {c.seed};
  convergence_table(convergence_study(cc)).write(out.path("micro.csv"));
}

void run_converge(const RunConfig& c, Artifacts& out) {
  const ConvergenceReport r = convergence_study(convergence_config(c));
  convergence_table(r).write(out.path("convergence.csv"));
  CsvTable v({"verdict", "seeds_passing", "seeds"}, "convergence_verdicts");
  const auto n = std::to_string(c.verify.seed_count);
  v.add_row({"l2_decreasing", std::to_string(r.seeds_decreasing(&ConvergenceRow::l2)), n});
  v.add_row({"energy_gap_decreasing", std::to_string(r.seeds_decreasing(&ConvergenceRow::energy_gap)), n});
  v.add_row({"corrected_h1_decreasing", std::to_string(r.seeds_decreasing(&ConvergenceRow::corrected_h1)), n});
  v.add_row({"rows_corrector_better", std::to_string(r.rows_corrector_better()), std::to_string(r.rows.size())});
  v.write(out.path("verdicts.csv"));
}

void run_dilute(const RunConfig& c, Artifacts& out) {
  const DiluteReport r = dilute_study(make_shape(c), c.verify.dilute_phi, c.verify.dilute_h, c.cell.mu, c.jobs);
  dilute_table(r).write(out.path("dilute.csv"));
  CsvTable fit({"slope", "intercept", "slope_origin", "slope_finest", "rate"}, "dilute_fit");
  fit.add_row(std::vector<double>{r.slope, r.intercept, r.slope_origin, r.slope_finest, r.rate});
  fit.write(out.path("dilute_fit.csv"));
  spdlog::info("dilute slope {:.6f} (finest mesh {:.6f})", r.slope, r.slope_finest);
}

void configure_logging(bool quiet) {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("homsusp");
    spdlog::set_default_logger(l);
    return l;
  }();
  logger->set_level(quiet ? spdlog::level::warn : spdlog::level::info);
}

json versions() {
  return {{"homsusp", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"umfpack", std::to_string(UMFPACK_MAIN_VERSION) + "." + std::to_string(UMFPACK_SUB_VERSION) + "." +
                          std::to_string(UMFPACK_SUBSUB_VERSION)},
          {"csv_schema", kCsvSchemaVersion},
          {"compiler", __VERSION__}};
}

void report_error(const Error& e, const fs::path& dir) {
  const std::string text = error_json(e);
  std::cerr << text << "\n";
  if (dir.empty()) return;
  try {
    fs::create_directories(dir);
    write_text_atomic((dir / "error.json").string(), text + "\n");
  } catch (...) {
  }
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorCode::IoError, "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"cell", "tensor", "fstar", "ergodic", "macro", "micro", "converge", "dilute"};
  return names;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SolverDiverged:
    case ErrorCode::PicardStalled:
    case ErrorCode::MeshGenFailure:
      return 3;
    default:
      return 2;
  }
}

std::string error_json(const Error& error) {
  json j{{"error", std::string(to_string(error.code()))},
         {"message", error.what()},
         {"exit_code", exit_code_for(error.code())}};
  if (const auto* traced = dynamic_cast<const TracedError*>(&error)) j["trace"] = traced->trace();
  return j.dump();
}

int dispatch(const std::string& command, const std::string& config_path, const Overrides& overrides) {
  fs::path dir;
  configure_logging(overrides.quiet);
  try {
    if (std::find(commands().begin(), commands().end(), command) == commands().end())
      fail(ErrorCode::ConfigError, "unknown command '" + command + "'");
    if (config_path.empty()) fail(ErrorCode::ConfigError, "no config file given (--config PATH)");
    RunConfig config = load_config(config_path);
    apply_overrides(config, overrides);
    configure_logging(config.quiet);
    dir = config.out;
    fs::create_directories(dir);

    RunConfig canonical = config;
    canonical.out = "";
    canonical.quiet = false;
    const std::string resolved = resolved_config(config);

    Artifacts out{dir, {}};
    write_text_atomic(out.path("resolved_config.toml"), resolved);
    spdlog::info("{}: seed {}, output in {}", command, config.seed, dir.string());
    if (command == "cell") run_cell(config, out);
    else if (command == "tensor") run_tensor(config, out);
    else if (command == "fstar") run_fstar(config, out);
    else if (command == "ergodic") run_ergodic(config, out);
    else if (command == "macro") run_macro(config, out);
    else if (command == "micro") run_micro(config, out);
    else if (command == "converge") run_converge(config, out);
    else run_dilute(config, out);

    json manifest{{"command", command},
                  {"seed", config.seed},
                  {"jobs", config.jobs},
                  {"dim", config.dim},
                  {"inputs", {{"resolved_config_sha256", sha256_hex(resolved_config(canonical))}}},
                  {"versions", versions()},
                  {"outputs", json::array()}};
    for (const auto& f : out.files) {
      if (f == "resolved_config.toml") continue;
      manifest["outputs"].push_back({{"file", f}, {"sha256", sha256_file(dir / f)}});
    }
    write_text_atomic((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    return 0;
  } catch (const Error& e) {
    report_error(e, dir);
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    report_error(Error(ErrorCode::IoError, e.what()), {});
    return 2;
  } catch (const std::exception& e) {
    report_error(Error(ErrorCode::SolverDiverged, std::string("internal failure: ") + e.what()), dir);
    return 3;
  }
}

}  // namespace homsusp
