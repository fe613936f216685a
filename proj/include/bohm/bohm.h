/*
 * C interface to the Bohmian Dirac-electron engine.
 *
 * All objects are opaque handles created by bohm_*_create / bohm_*_load and
 * released with the matching *_free call. Functions return a bohm_status;
 * on failure bohm_last_error() describes the problem for the calling thread.
 * Spinors cross the boundary as 8 doubles: (re0, im0, re1, im1, ...).
 */
#ifndef BOHM_BOHM_H
#define BOHM_BOHM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BOHM_BUILDING_LIBRARY)
#    define BOHM_API __declspec(dllexport)
#  else
#    define BOHM_API __declspec(dllimport)
#  endif
#else
#  define BOHM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bohm_status {
  BOHM_OK = 0,
  BOHM_E_INVALID_ARGUMENT = 1,
  BOHM_E_CONFIG = 2,
  BOHM_E_NEAR_NODE = 3,
  BOHM_E_DEGENERATE_DENSITY = 4,
  BOHM_E_TOO_MANY_LOST = 5,
  BOHM_E_NOT_UNIT = 6,
  BOHM_E_ZERO_SPINOR = 7,
  BOHM_E_ZERO_WAVE_VECTOR = 8,
  BOHM_E_MIXED_MASS = 9,
  BOHM_E_NODE_AT_ORIGIN = 10,
  BOHM_E_SINGULAR_SYSTEM = 11,
  BOHM_E_STEP_FAILURE = 12,
  BOHM_E_INTERNAL = 13
} bohm_status;

typedef struct bohm_model bohm_model;
typedef struct bohm_trajectory bohm_trajectory;
typedef struct bohm_scenario bohm_scenario;

BOHM_API const char* bohm_version(void);
BOHM_API const char* bohm_last_error(void);
BOHM_API const char* bohm_status_name(bohm_status status);

/* Strings returned through char** are owned by the caller. */
BOHM_API void bohm_string_free(char* s);

/* ---- spinor functionals ---- */
BOHM_API bohm_status bohm_current(const double psi[8], double j[4]);
BOHM_API bohm_status bohm_bohm_velocity(const double psi[8], double psi_floor, double v[3]);
BOHM_API bohm_status bohm_lorentz_invariants(const double psi[8], double* s, double* p);
BOHM_API bohm_status bohm_s_deviation(const double psi[8], double* out);

/* ---- wave-function models ---- */
BOHM_API bohm_status bohm_model_circular(double omega, bohm_model** out);
/* k: 3n doubles, branch: n ints (1 or 2), amplitude: 2n doubles (re, im). */
BOHM_API bohm_status bohm_model_plane_waves(double mass, size_t n, const double* k,
                                            const int* branch, const double* amplitude,
                                            bohm_model** out);
BOHM_API bohm_status bohm_model_gaussian_packet(double mass, const double center_k[3],
                                                double width_k, int branch, int nodes_per_axis,
                                                double radius, bohm_model** out);
/* Model JSON uses the "model" object schema of the scenario config. */
BOHM_API bohm_status bohm_model_from_json(const char* json, bohm_model** out);
BOHM_API void bohm_model_free(bohm_model* model);

BOHM_API bohm_status bohm_model_evaluate(const bohm_model* model, double t, const double q[3],
                                         double psi[8]);
/* grad: 32 doubles, spinors d_t, d_x, d_y, d_z in that order. */
BOHM_API bohm_status bohm_model_gradient(const bohm_model* model, double t, const double q[3],
                                         double grad[32]);
BOHM_API bohm_status bohm_model_dirac_residual(const bohm_model* model, double t,
                                               const double q[3], double* out);
BOHM_API bohm_status bohm_model_velocity(const bohm_model* model, double t, const double q[3],
                                         double psi_floor, double v[3]);

/* ---- trajectories ---- */
typedef struct bohm_integrator_options {
  double rel_tol;
  double abs_tol;
  double max_step;          /* <= 0 means unbounded */
  double psi_floor;
  double speed_event_epsilon;
  size_t max_samples;
  int fixed_step_rk4;
  double fixed_step;
} bohm_integrator_options;

BOHM_API void bohm_integrator_options_default(bohm_integrator_options* opts);

/* opts may be NULL for defaults. */
BOHM_API bohm_status bohm_integrate(const bohm_model* model, const double q0[3], double t1,
                                    double t2, const bohm_integrator_options* opts,
                                    bohm_trajectory** out);
BOHM_API void bohm_trajectory_free(bohm_trajectory* traj);
BOHM_API size_t bohm_trajectory_size(const bohm_trajectory* traj);
/* row: t, x, y, z, vx, vy, vz, speed, sdev, density */
BOHM_API bohm_status bohm_trajectory_sample(const bohm_trajectory* traj, size_t index,
                                            double row[10]);
BOHM_API bohm_status bohm_trajectory_position_at(const bohm_trajectory* traj, double t,
                                                 double q[3]);
BOHM_API bohm_status bohm_trajectory_write_csv(const bohm_trajectory* traj, const char* path);
BOHM_API bohm_status bohm_trajectory_events_json(const bohm_trajectory* traj, char** json);
/* Intervals where speed >= 1 - epsilon as a JSON array of [start, end]. */
BOHM_API bohm_status bohm_trajectory_speed_c_intervals(const bohm_trajectory* traj,
                                                       double epsilon, char** json);

/* ---- scenarios (the CLI surface) ---- */
BOHM_API bohm_status bohm_scenario_load(const char* path, bohm_scenario** out);
BOHM_API bohm_status bohm_scenario_parse(const char* text, bohm_scenario** out);
BOHM_API void bohm_scenario_free(bohm_scenario* scenario);
BOHM_API bohm_status bohm_scenario_set_seed(bohm_scenario* scenario, uint64_t seed);
BOHM_API bohm_status bohm_scenario_set_threads(bohm_scenario* scenario, unsigned threads);
/* Output directory from the config ("output.dir"); pointer valid until free. */
BOHM_API const char* bohm_scenario_output_dir(const bohm_scenario* scenario);
/* subcommand: simulate | ensemble | sigma | perturb. out_dir NULL uses the
 * config's output directory. summary_json may be NULL. */
BOHM_API bohm_status bohm_scenario_run(const bohm_scenario* scenario, const char* subcommand,
                                       const char* out_dir, char** summary_json);

/* Invariant suite; *all_passed set to 1 when every check passes. */
BOHM_API bohm_status bohm_validate(uint64_t seed, unsigned threads, char** report_json,
                                   int* all_passed);

#ifdef __cplusplus
}
#endif

#endif /* BOHM_BOHM_H */
