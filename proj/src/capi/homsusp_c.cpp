#include "homsusp/homsusp.h"

#include <memory>
#include <new>
#include <optional>
#include <string>

#include "homsusp/app.hpp"
#include "homsusp/cell.hpp"
#include "homsusp/error.hpp"
#include "homsusp/forces.hpp"

struct homsusp_cell {
  std::unique_ptr<homsusp::CellSolver> solver;
  std::optional<homsusp::EffectiveTensor> tensor;
};

struct homsusp_force {
  homsusp::SurfaceForceModel model;
};

namespace {

thread_local std::string last_error;

homsusp_status status_of(homsusp::ErrorCode code) {
  using homsusp::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return HOMSUSP_E_INVALID_ARGUMENT;
    case ErrorCode::ShapeTouchesBoundary: return HOMSUSP_E_SHAPE_TOUCHES_BOUNDARY;
    case ErrorCode::MeshGenFailure: return HOMSUSP_E_MESH_GEN_FAILURE;
    case ErrorCode::NoParticles: return HOMSUSP_E_NO_PARTICLES;
    case ErrorCode::NonMatchingFaces: return HOMSUSP_E_NON_MATCHING_FACES;
    case ErrorCode::SingularViscosity: return HOMSUSP_E_SINGULAR_VISCOSITY;
    case ErrorCode::NonTraceFreeStrain: return HOMSUSP_E_NON_TRACE_FREE_STRAIN;
    case ErrorCode::SolverDiverged: return HOMSUSP_E_SOLVER_DIVERGED;
    case ErrorCode::PicardStalled: return HOMSUSP_E_PICARD_STALLED;
    case ErrorCode::ConfigError: return HOMSUSP_E_CONFIG;
    case ErrorCode::IoError: return HOMSUSP_E_IO;
  }
  return HOMSUSP_E_INTERNAL;
}

template <class F>
homsusp_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return HOMSUSP_OK;
  } catch (const homsusp::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return HOMSUSP_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return HOMSUSP_E_INTERNAL;
  }
}

homsusp_status null_argument(const char* name) {
  last_error = std::string(name) + " must not be NULL";
  return HOMSUSP_E_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* homsusp_version(void) { return "0.1.0"; }

const char* homsusp_last_error(void) { return last_error.c_str(); }

const char* homsusp_status_name(homsusp_status status) {
  switch (status) {
    case HOMSUSP_OK: return "Ok";
    case HOMSUSP_E_INVALID_ARGUMENT: return "InvalidArgument";
    case HOMSUSP_E_SHAPE_TOUCHES_BOUNDARY: return "ShapeTouchesBoundary";
    case HOMSUSP_E_MESH_GEN_FAILURE: return "MeshGenFailure";
    case HOMSUSP_E_NO_PARTICLES: return "NoParticles";
    case HOMSUSP_E_NON_MATCHING_FACES: return "NonMatchingFaces";
    case HOMSUSP_E_SINGULAR_VISCOSITY: return "SingularViscosity";
    case HOMSUSP_E_NON_TRACE_FREE_STRAIN: return "NonTraceFreeStrain";
    case HOMSUSP_E_SOLVER_DIVERGED: return "SolverDiverged";
    case HOMSUSP_E_PICARD_STALLED: return "PicardStalled";
    case HOMSUSP_E_CONFIG: return "ConfigError";
    case HOMSUSP_E_IO: return "IoError";
    case HOMSUSP_E_INTERNAL: return "Internal";
  }
  return "Unknown";
}

homsusp_status homsusp_cell_create(homsusp_shape shape, double phi, double param, double h, double mu,
                                   homsusp_cell** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    homsusp::InclusionShape s;
    switch (shape) {
      case HOMSUSP_DISK: s = homsusp::InclusionShape::disk(phi); break;
      case HOMSUSP_ELLIPSE: s = homsusp::InclusionShape::ellipse(phi, param); break;
      case HOMSUSP_ROUNDED_SQUARE: s = homsusp::InclusionShape::rounded_square(phi, param); break;
      default: homsusp::fail(homsusp::ErrorCode::InvalidArgument, "unknown shape");
    }
    auto mesh = std::make_shared<const homsusp::CellMesh>(homsusp::build_cell_mesh(s, h));
    auto cell = std::make_unique<homsusp_cell>();
    cell->solver = std::make_unique<homsusp::CellSolver>(mesh, mu);
    *out = cell.release();
  });
}

void homsusp_cell_destroy(homsusp_cell* cell) { delete cell; }

homsusp_status homsusp_cell_dissipation(const homsusp_cell* cell, const double A[4], double* dissipation) {
  if (!cell) return null_argument("cell");
  if (!A) return null_argument("A");
  if (!dissipation) return null_argument("dissipation");
  return guarded([&] {
    homsusp::Mat2 M;
    M << A[0], A[1], A[2], A[3];
    *dissipation = cell->solver->solve(M).dissipation;
  });
}

homsusp_status homsusp_cell_tensor(homsusp_cell* cell, double mu_star[4], double C[4]) {
  if (!cell) return null_argument("cell");
  return guarded([&] {
    if (!cell->tensor) cell->tensor = homsusp::effective_tensor(*cell->solver).tensor;
    for (int i = 0; i < 4; ++i) {
      if (mu_star) mu_star[i] = cell->tensor->mu_star(i / 2, i % 2);
      if (C) C[i] = cell->tensor->C(i / 2, i % 2);
    }
  });
}

homsusp_status homsusp_force_create(double phi, homsusp_profile profile, const double b[2], double kappa,
                                    double weight, double lo, double hi, homsusp_force** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (profile == HOMSUSP_PROFILE_LINEAR && !b) return null_argument("b");
  return guarded([&] {
    homsusp::Profile p;
    switch (profile) {
      case HOMSUSP_PROFILE_NONE: p = homsusp::Profile::none(); break;
      case HOMSUSP_PROFILE_LINEAR: p = homsusp::Profile::linear(homsusp::Vec2(b[0], b[1])); break;
      case HOMSUSP_PROFILE_SQRT1P: p = homsusp::Profile::sqrt1p(); break;
      case HOMSUSP_PROFILE_HUBER: p = homsusp::Profile::huber(kappa); break;
      default: homsusp::fail(homsusp::ErrorCode::InvalidArgument, "unknown profile");
    }
    homsusp::SurfaceWeight w;
    w.mean = weight;
    const auto shape = homsusp::InclusionShape::disk(phi);
    shape.validate();
    *out = new homsusp_force{homsusp::SurfaceForceModel(shape, p, w, homsusp::AmplitudeLaw::uniform(lo, hi))};
  });
}

void homsusp_force_destroy(homsusp_force* force) { delete force; }

homsusp_status homsusp_fstar(const homsusp_force* force, const double z[2], int samples, uint64_t seed,
                             double f[2], double half_width[2]) {
  if (!force) return null_argument("force");
  if (!z) return null_argument("z");
  if (!f) return null_argument("f");
  return guarded([&] {
    const homsusp::RandomCellField field(seed, force->model.law());
    const auto method = samples == 0 ? homsusp::Expectation::ClosedForm : homsusp::Expectation::MonteCarlo;
    const auto e = homsusp::homogenized_force(force->model, homsusp::Vec2(z[0], z[1]), samples, field, method);
    f[0] = e.value.x();
    f[1] = e.value.y();
    if (half_width) {
      half_width[0] = e.half_width.x();
      half_width[1] = e.half_width.y();
    }
  });
}

homsusp_status homsusp_run(const char* command, const homsusp_run_options* options, int* exit_code) {
  if (!command) return null_argument("command");
  if (!options) return null_argument("options");
  if (!exit_code) return null_argument("exit_code");
  return guarded([&] {
    homsusp::Overrides o;
    if (options->has_seed) o.seed = options->seed;
    if (options->jobs > 0) o.jobs = options->jobs;
    if (options->out_dir) o.out = std::string(options->out_dir);
    if (options->dim != 0) o.dim = options->dim;
    o.quiet = options->quiet != 0;
    *exit_code = homsusp::dispatch(command, options->config_path ? options->config_path : "", o);
  });
}

}  // extern "C"
