#pragma once

#include <cstddef>
#include <span>

#include "phaseless/measurement.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

// min over theta of ||x - truth e^{i theta}||_2; the minimizer is the phase of <truth, x>.
double dist(const CVector& x, const CVector& truth);
double relative_error(const CVector& x, const CVector& truth);

// || |Ax|^2 - y ||_2 / ||y||_2
double relative_residual(const Ensemble& ensemble, const RVector& y, const CVector& x);

// Success threshold on relative error used by every experiment.
inline constexpr double kSuccessTolerance = 1e-5;

struct TerminationPolicy {
    std::size_t max_iterations = 2500;   // ER / Wirtinger Flow
    std::size_t max_cycles = 500;        // Kaczmarz methods
    double rel_residual_tol = 1e-8;      // epsilon_1
    double cycle_residual_tol = 1e-7;    // epsilon_2

    void validate() const;
};

// One pre-projection observation: the deviation | |a_r^* x|^2 - y_r | (or the
// block norm || |A_G x|^2 - y_G ||_2) and its scale |y_r| (or ||y_G||_2).
struct ResidualSample {
    double deviation = 0.0;
    double scale = 0.0;
};

// Running max of deviation / scale over one cycle. Samples with zero scale
// are excluded and counted.
class CycleMonitor {
public:
    void observe(double deviation, double scale);
    void reset();

    double max_ratio() const { return max_ratio_; }
    std::size_t excluded() const { return excluded_; }
    bool passes(double tolerance) const { return max_ratio_ <= tolerance; }

private:
    double max_ratio_ = 0.0;
    std::size_t excluded_ = 0;
};

bool cycle_residual_check(std::span<const ResidualSample> cycle, double tolerance,
                          std::size_t* excluded = nullptr);

} // namespace phaseless
