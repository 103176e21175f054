#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "phaseless/measurement.hpp"
#include "phaseless/paving.hpp"
#include "phaseless/solvers.hpp"

namespace phaseless {

// Dense decompositions are capped at this signal dimension.
inline constexpr std::size_t kMaxDenseDimension = 2048;

struct MatrixStats {
    RVector singular_values;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double frobenius = 0.0;
    double scaled_condition = 0.0;   // k(A) = ||A||_F ||A^+||_2
    // Filled when a paving is supplied.
    RVector block_conditions;
    double mean_block_condition = 0.0;
    double max_block_condition = 0.0;
    double paving_alpha = 0.0;
    double paving_beta = 0.0;
    double bai_yin_prediction = 0.0;   // for the paving's first block size
};

// (1 + sqrt(k/n)) / (1 - sqrt(k/n)); infinite for k >= n.
double bai_yin_condition(std::size_t block_rows, std::size_t n);

MatrixStats matrix_stats(const Ensemble& ensemble, const Paving* paving = nullptr);

// ---------------------------------------------------------------------------
// Two successive block steps versus one step on the union.

struct Proposition1Report {
    std::size_t instances = 0;
    double max_deviation = 0.0;          // orthogonal blocks
    double min_control_deviation = 0.0;  // non-orthogonal blocks
    double control_fraction_above = 0.0; // fraction of controls with deviation > 1e-3
    bool passed = false;
};

// || x_2 - x_12 ||_2 for blocks A_i, A_j (rows of a common ensemble) from x0.
double two_step_deviation(const RowMatrix& block_i, const RowMatrix& block_j, const RVector& sqrt_y_i,
                          const RVector& sqrt_y_j, const CVector& x0);

Proposition1Report verify_proposition1(Rng& rng, std::size_t n, std::size_t rows_i, std::size_t rows_j,
                                       std::size_t instances);

// ---------------------------------------------------------------------------
// Exhaustive search for the phase minimizing || A^+ (sqrt(y) .* e^{i theta} - A x_l) ||_2.

struct PhaseSearchResult {
    RVector theta;
    double objective = 0.0;
};

double block_projection_objective(const CMatrix& pinv, const RVector& sqrt_y, const CVector& current,
                                  const CVector& phases);

// Real field: enumeration of sign patterns. Complex field: `resolution`
// points per phase on [0, 2pi), at most 3 phases, then a shrinking-step
// coordinate search from the best grid point.
PhaseSearchResult brute_force_block_projection(const CMatrix& pinv, const RVector& sqrt_y, const CVector& current,
                                               Field field, std::size_t resolution = 720);

struct Example1Report {
    double heuristic_objective = 0.0;   // at sign(A x_l) = (1, 1)
    double alternative_objective = 0.0; // at (1, -1)
    RVector oracle_signs;
    double oracle_objective = 0.0;
};

Example1Report verify_example1();

// ---------------------------------------------------------------------------
// || x^{theta_hat} - x_{l+1} || <= kappa(A_G) max|e^{i theta_hat} - e^{i theta_l}| ||x_hat||

struct Theorem1Report {
    std::size_t instances = 0;
    std::size_t violations = 0;
    double max_ratio = 0.0;    // lhs / rhs over instances with rhs > 0
    double mean_gap = 0.0;     // mean (rhs - lhs)
    double condition = 0.0;    // largest kappa seen
};

// condition == 0 draws Gaussian blocks; otherwise blocks with exactly that kappa.
Theorem1Report verify_theorem1(Rng& rng, std::size_t instances, std::size_t n, std::size_t block_rows,
                               Field field, double condition = 0.0, double slack = 1e-9);

// ---------------------------------------------------------------------------
// Simple Kaczmarz: theta_l minimizes || x^theta_{l+1} - x_l || over theta.

struct ProjectionOptimalityReport {
    std::size_t instances = 0;
    std::size_t mismatches = 0;   // grid beat the heuristic by more than the grid bound
    double max_improvement = 0.0; // largest objective(theta_l) - min_grid objective
    double max_angle_gap = 0.0;   // circular distance between argmins
};

ProjectionOptimalityReport verify_simple_projection_optimality(Rng& rng, std::size_t instances, std::size_t n,
                                                               std::size_t grid = 4096);

// ---------------------------------------------------------------------------
// Monte-Carlo trackers for the randomized convergence envelopes.

struct BoundTrace {
    std::vector<std::size_t> iterations;
    std::vector<double> empirical;   // mean dist^2 over runs
    std::vector<double> envelope;
    double floor = 0.0;
    double contraction = 0.0;        // per-iteration factor
    double sigma_min = 0.0;
    std::size_t crossings = 0;
    double crossing_fraction = 0.0;
};

// Uniform random rows. `ensemble` must be standardized with full column rank.
BoundTrace verify_theorem2(const Ensemble& ensemble, const CVector& truth, const CVector& x0, std::size_t runs,
                           std::size_t horizon, std::uint64_t seed, std::size_t stride = 1);

// Uniform random blocks of `paving`.
BoundTrace verify_theorem3(const Ensemble& ensemble, const Paving& paving, const CVector& truth, const CVector& x0,
                           std::size_t runs, std::size_t horizon, std::uint64_t seed, std::size_t stride = 1);

} // namespace phaseless
