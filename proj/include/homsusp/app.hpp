#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "homsusp/cell.hpp"
#include "homsusp/error.hpp"
#include "homsusp/forces.hpp"
#include "homsusp/macro.hpp"

namespace homsusp {

struct GeometryConfig {
  std::string shape = "disk";
  double phi = 0.1;
  double aspect = 1.0;
  double corner = 0.5;
  double delta_min = 0.05;
  std::array<double, 2> domain_lo{0.0, 0.0};
  std::array<double, 2> domain_hi{1.0, 1.0};
  std::string eps = "1/8";
  double h_per_cell = 1.0 / 16;
};

struct FemConfig {
  std::string solver = "auto";
  int direct_limit = 200000;
  double tol = 1e-10;
  int max_iterations = 2000;
};

struct CellConfig {
  double mu = 1.0;
  double h = 1.0 / 32;
  std::array<double, 4> strain{0.0, 1.0, 1.0, 0.0};  // row-major A for `cell`
};

struct ForcesConfig {
  std::string profile = "sqrt1p";
  std::array<double, 2> b{1.0, 0.0};
  double kappa = 1.0;
  double weight_mean = 1.0;
  std::vector<double> weight_cos;
  std::vector<double> weight_sin;
  std::string law = "uniform";
  double lo = 0.5;
  double hi = 1.5;
  double mu_ln = 0.0;
  double sigma_ln = 0.25;
  std::string expectation = "closed_form";
  int samples = 256;
  std::vector<std::array<double, 2>> z{{0.0, 0.0}, {0.5, 0.0}, {0.0, 1.0}};
  std::string ergodic_eps = "1/64";
  int ergodic_midpoints = 4;
  int ergodic_seeds = 20;
};

struct PicardConfig {
  double theta = 1.0;
  int max_iterations = 500;
  double tol = 1e-10;
};

struct MacroConfig {
  double h = 1.0 / 64;
  std::string body_force = "vortex";
  std::array<double, 2> body_force_value{1.0, 0.0};  // for body_force = "constant"
  PicardConfig picard;
  bool tabulate = false;
  int table_points = 33;
};

struct MicroConfig {
  PicardConfig picard{1.0, 500, 1e-9};
};

struct VerifyConfig {
  std::vector<std::string> eps{"1/4", "1/8", "1/16"};
  int seed_count = 3;
  std::vector<double> dilute_phi{0.005, 0.01, 0.02};
  std::vector<double> dilute_h{1.0 / 16, 1.0 / 32};
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = "out";
  int jobs = 1;
  int dim = 2;
  bool quiet = false;
  GeometryConfig geometry;
  FemConfig fem;
  CellConfig cell;
  ForcesConfig forces;
  MacroConfig macro;
  MicroConfig micro;
  VerifyConfig verify;
};

/// Parses TOML; unknown keys, wrong types and bad values throw ConfigError.
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_config(const std::string& path);

/// Every value, defaults included, in TOML that parse_config accepts.
std::string resolved_config(const RunConfig& config);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<int> dim;
  bool quiet = false;
};

void apply_overrides(RunConfig& config, const Overrides& overrides);

// Model objects built from a validated config.
InclusionShape make_shape(const RunConfig& config);
Box make_domain(const RunConfig& config);
SolverOptions make_solver_options(const RunConfig& config);
std::optional<SurfaceForceModel> make_force_model(const RunConfig& config);
VectorFn make_body_force(const RunConfig& config);

const std::vector<std::string>& commands();

/// Exit status for an error code: 2 for configuration and input problems, 3 for solver failures.
int exit_code_for(ErrorCode code);

/// {"error": ..., "message": ..., "exit_code": ..., "trace": [...]}
std::string error_json(const Error& error);

/// Runs one command and writes its artifacts plus manifest.json and resolved_config.toml
/// into the output directory. Errors are reported as JSON on stderr and in error.json;
/// the return value is the process exit status.
int dispatch(const std::string& command, const std::string& config_path, const Overrides& overrides);

std::string sha256_hex(const std::string& data);

}  // namespace homsusp
