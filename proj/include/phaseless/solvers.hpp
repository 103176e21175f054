#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "phaseless/measurement.hpp"
#include "phaseless/metrics.hpp"
#include "phaseless/paving.hpp"

namespace phaseless {

// Phase of a complex number in [0, 2pi); zero maps to 0.
double angle_of(Complex v);
RVector angle_of(const CVector& v);
// e^{i angle(v)} elementwise, with the zero convention above.
Complex unit_phase(Complex v);
CVector unit_phase(const CVector& v);

enum class Selection { Cyclic, Uniform, NormWeighted };

const char* to_string(Selection s);

enum class SolveStatus { Converged, BudgetExhausted, ReachedTarget, Diverged };

const char* to_string(SolveStatus s);

// Step size mu_l = min(1 - exp(-(l+1)/tau0), mu_max), or a constant when
// `constant` is set.
struct StepSchedule {
    double tau0 = 330.0;
    double mu_max = 0.2;
    std::optional<double> constant;

    double operator()(std::size_t iteration) const;
};

struct SolveOptions {
    TerminationPolicy termination;
    Selection selection = Selection::Cyclic;
    double relaxation = 1.0;
    StepSchedule step;
    std::uint64_t seed = 0;

    // When set, the solver also tracks dist to the truth; it may stop as soon
    // as the relative error is at most `target_relative_error`.
    std::optional<CVector> truth;
    std::optional<double> target_relative_error;

    bool record_history = false;
};

// One history row: after `iteration` updates (ER / WF) or at the end of cycle
// `iteration` (Kaczmarz). `residual` is || |Ax|-sqrt(y) ||_2 for ER, the
// relative residual for WF, and the cycle's max pre-projection residual for
// the Kaczmarz methods. `distance` is NaN without a truth.
struct HistoryEntry {
    std::size_t iteration = 0;
    double residual = 0.0;
    double distance = 0.0;
};

struct SolverState {
    CVector x;
    std::size_t iterations = 0;
    std::size_t cycles = 0;
    SolveStatus status = SolveStatus::BudgetExhausted;
    std::size_t skipped_rows = 0;
    std::vector<HistoryEntry> history;
};

SolverState error_reduction(const Ensemble& ensemble, const Measurements& meas, CVector x0,
                            const SolveOptions& options);

double wirtinger_loss(const Ensemble& ensemble, const RVector& y, const CVector& x);
CVector wirtinger_gradient(const Ensemble& ensemble, const RVector& y, const CVector& x);
SolverState wirtinger_flow(const Ensemble& ensemble, const Measurements& meas, CVector x0,
                           const SolveOptions& options);

// One simple Kaczmarz update on row r with relaxation lambda. Returns
// <a_r, x> before the update.
Complex kaczmarz_row_step(const Ensemble& ensemble, const Measurements& meas, std::size_t r, double lambda,
                          CVector& x);
SolverState simple_kaczmarz(const Ensemble& ensemble, const Measurements& meas, CVector x0,
                            const SolveOptions& options);

// One block Kaczmarz update on block b. Returns A_Gamma x before the update.
CVector kaczmarz_block_step(const Ensemble& ensemble, const Measurements& meas, const Paving& paving,
                            std::size_t b, CVector& x);
SolverState block_kaczmarz(const Ensemble& ensemble, const Measurements& meas, const Paving& paving,
                           CVector x0, const SolveOptions& options);

} // namespace phaseless
