/*
 * C interface to the phaseless solvers and experiment harness.
 *
 * Complex vectors cross the boundary as interleaved doubles
 * (re0, im0, re1, im1, ...); real vectors as plain doubles.
 * Every fallible call returns a phl_status; phl_last_error() holds the
 * message of the most recent failure on the calling thread.
 */
#ifndef PHASELESS_H
#define PHASELESS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PHL_API __declspec(dllexport)
#else
#define PHL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum phl_status {
    PHL_OK = 0,
    PHL_INVALID_ARGUMENT = 1,
    PHL_DIMENSION_MISMATCH = 2,
    PHL_RANK_DEFICIENT = 3,
    PHL_NUMERIC = 4,
    PHL_IO = 5,
    PHL_CONFIG = 6,
    PHL_INTERNAL = 7
} phl_status;

PHL_API const char* phl_version(void);
PHL_API const char* phl_status_string(phl_status status);
PHL_API const char* phl_last_error(void);

typedef struct phl_ensemble phl_ensemble;

/* complex_field: 0 for real entries, 1 for complex. */
PHL_API phl_status phl_ensemble_gaussian(size_t n, size_t m, int complex_field, uint64_t seed, phl_ensemble** out);
PHL_API phl_status phl_ensemble_unitary(size_t n, size_t m, int complex_field, uint64_t seed, phl_ensemble** out);
/* n2 == 1 gives the 1D model. */
PHL_API phl_status phl_ensemble_cdp(size_t n1, size_t n2, size_t patterns, uint64_t seed, phl_ensemble** out);
/* Row-major m x n, interleaved complex. */
PHL_API phl_status phl_ensemble_from_matrix(size_t m, size_t n, const double* entries, int complex_field,
                                            phl_ensemble** out);
PHL_API void phl_ensemble_free(phl_ensemble* ensemble);

PHL_API size_t phl_ensemble_rows(const phl_ensemble* ensemble);
PHL_API size_t phl_ensemble_cols(const phl_ensemble* ensemble);

/* z = A x; x has cols entries, z has rows entries (both complex). */
PHL_API phl_status phl_forward(const phl_ensemble* ensemble, const double* x, double* z);
/* y = |A x|^2 (real, rows entries). */
PHL_API phl_status phl_measure(const phl_ensemble* ensemble, const double* x, double* y);

typedef enum phl_solver { PHL_SOLVER_ER = 0, PHL_SOLVER_WF = 1, PHL_SOLVER_KACZMARZ = 2, PHL_SOLVER_BLOCK_KACZMARZ = 3 } phl_solver;

typedef enum phl_selection { PHL_SELECT_CYCLIC = 0, PHL_SELECT_UNIFORM = 1, PHL_SELECT_NORM_WEIGHTED = 2 } phl_selection;

typedef enum phl_solve_status {
    PHL_SOLVE_CONVERGED = 0,
    PHL_SOLVE_BUDGET_EXHAUSTED = 1,
    PHL_SOLVE_REACHED_TARGET = 2,
    PHL_SOLVE_DIVERGED = 3
} phl_solve_status;

typedef struct phl_solver_options {
    phl_solver solver;
    phl_selection selection;
    double relaxation;          /* simple Kaczmarz step scale */
    size_t block_size;          /* 0: one CDP pattern, n/4 otherwise */
    size_t max_iterations;      /* ER / WF */
    size_t max_cycles;          /* Kaczmarz */
    double rel_residual_tol;    /* ER / WF stopping tolerance */
    double cycle_residual_tol;  /* Kaczmarz stopping tolerance */
    uint64_t seed;              /* randomized selection */
} phl_solver_options;

typedef struct phl_solve_report {
    size_t iterations;
    size_t cycles;
    phl_solve_status status;
} phl_solve_report;

PHL_API void phl_solver_options_default(phl_solver_options* options);

/* x_out (cols complex entries) receives the estimate; report may be NULL. */
PHL_API phl_status phl_solve(const phl_ensemble* ensemble, const double* y, const double* x0,
                             const phl_solver_options* options, double* x_out, phl_solve_report* report);

PHL_API phl_status phl_spectral_init(const phl_ensemble* ensemble, const double* y, uint64_t seed, double* x0_out);

/* min over theta of ||x - truth e^{i theta}||_2. */
PHL_API phl_status phl_dist(size_t n, const double* x, const double* truth, double* out);

/*
 * Runs a harness command ("sweep", "noise", "timing", "relax", "image",
 * "verify", "stats") on a JSON configuration. On success *summary_json
 * receives a JSON document to be released with phl_string_free.
 */
PHL_API phl_status phl_run_experiment(const char* command, const char* config_json, char** summary_json);
PHL_API void phl_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
