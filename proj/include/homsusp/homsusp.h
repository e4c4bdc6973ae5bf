#ifndef HOMSUSP_H
#define HOMSUSP_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum homsusp_status {
  HOMSUSP_OK = 0,
  HOMSUSP_E_INVALID_ARGUMENT = 1,
  HOMSUSP_E_SHAPE_TOUCHES_BOUNDARY = 2,
  HOMSUSP_E_MESH_GEN_FAILURE = 3,
  HOMSUSP_E_NO_PARTICLES = 4,
  HOMSUSP_E_NON_MATCHING_FACES = 5,
  HOMSUSP_E_SINGULAR_VISCOSITY = 6,
  HOMSUSP_E_NON_TRACE_FREE_STRAIN = 7,
  HOMSUSP_E_SOLVER_DIVERGED = 8,
  HOMSUSP_E_PICARD_STALLED = 9,
  HOMSUSP_E_CONFIG = 10,
  HOMSUSP_E_IO = 11,
  HOMSUSP_E_INTERNAL = 12
} homsusp_status;

typedef enum homsusp_shape { HOMSUSP_DISK = 0, HOMSUSP_ELLIPSE = 1, HOMSUSP_ROUNDED_SQUARE = 2 } homsusp_shape;

typedef enum homsusp_profile {
  HOMSUSP_PROFILE_NONE = 0,
  HOMSUSP_PROFILE_LINEAR = 1,
  HOMSUSP_PROFILE_SQRT1P = 2,
  HOMSUSP_PROFILE_HUBER = 3
} homsusp_profile;

typedef struct homsusp_cell homsusp_cell;
typedef struct homsusp_force homsusp_force;

const char* homsusp_version(void);
/* Message of the last failed call on this thread; empty after a success. */
const char* homsusp_last_error(void);
const char* homsusp_status_name(homsusp_status status);

/* Periodic cell problem for one inclusion. `param` is the ellipse aspect ratio
   or the rounded-square corner ratio and is ignored for disks. */
homsusp_status homsusp_cell_create(homsusp_shape shape, double phi, double param, double h, double mu,
                                   homsusp_cell** out);
void homsusp_cell_destroy(homsusp_cell* cell);
/* A is row-major 2x2, symmetric and trace free. */
homsusp_status homsusp_cell_dissipation(const homsusp_cell* cell, const double A[4], double* dissipation);
/* mu* and C in the orthonormal deviatoric basis, row-major 2x2. Either output may be NULL. */
homsusp_status homsusp_cell_tensor(homsusp_cell* cell, double mu_star[4], double C[4]);

/* g = a w rho(z) on a disk of volume fraction phi with constant weight w and
   amplitudes uniform on [lo, hi]. `b` is read for the linear profile, `kappa` for huber. */
homsusp_status homsusp_force_create(double phi, homsusp_profile profile, const double b[2], double kappa,
                                    double weight, double lo, double hi, homsusp_force** out);
void homsusp_force_destroy(homsusp_force* force);
/* samples == 0 selects the closed-form expectation; half_width may be NULL. */
homsusp_status homsusp_fstar(const homsusp_force* force, const double z[2], int samples, uint64_t seed,
                             double f[2], double half_width[2]);

typedef struct homsusp_run_options {
  const char* config_path;
  int has_seed;
  uint64_t seed;
  int jobs;            /* 0 keeps the config value */
  const char* out_dir; /* NULL keeps the config value */
  int dim;             /* 0 keeps the config value */
  int quiet;
} homsusp_run_options;

/* Runs a CLI command; *exit_code receives 0, 2 (config) or 3 (solver). */
homsusp_status homsusp_run(const char* command, const homsusp_run_options* options, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif
